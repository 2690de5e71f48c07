"""Physical model of a color-center register: electron, environment and nuclei.

User-facing couplings and frequencies are plain Hz. Every derived ``omega``
quantity is angular (rad/s); the factor 2*pi is applied exactly once, in
:func:`frame_arrays`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateFrameError, ParseError, ValidationError

TWO_PI = 2.0 * math.pi

#: Gyromagnetic ratio of 13C in Hz/T.
GAMMA_C13 = 10.7084e6
#: Gyromagnetic ratio of 29Si in Hz/T (magnitude).
GAMMA_SI29 = 8.465e6
#: Gyromagnetic ratio of 15N in Hz/T (magnitude).
GAMMA_N15 = 4.316e6


def _finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}", name) from None
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}", name)
    return value


@dataclass(frozen=True)
class NuclearSpin:
    """One nucleus with its secular hyperfine pair (Hz) and gyromagnetic ratio (Hz/T)."""

    label: str
    a_zz: float
    a_zx: float
    gamma_n: float = GAMMA_C13
    species: str = "13C"

    def __post_init__(self):
        object.__setattr__(self, "a_zz", _finite(self.a_zz, "a_zz"))
        object.__setattr__(self, "a_zx", _finite(self.a_zx, "a_zx"))
        object.__setattr__(self, "gamma_n", _finite(self.gamma_n, "gamma_n"))
        if self.gamma_n <= 0:
            raise ValidationError(f"gamma_n must be > 0, got {self.gamma_n}", "gamma_n")
        if self.a_zx < 0:
            raise ValidationError(f"a_zx must be >= 0, got {self.a_zx}", "a_zx")
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("label must be a non-empty string", "label")


@dataclass(frozen=True)
class ElectronSpin:
    """The two electron sublevels ``s0``/``s1`` addressed by the microwave, and the detuning (Hz)."""

    s0: float
    s1: float
    detuning: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "s0", _finite(self.s0, "s0"))
        object.__setattr__(self, "s1", _finite(self.s1, "s1"))
        object.__setattr__(self, "detuning", _finite(self.detuning, "detuning"))
        if self.s0 == self.s1:
            raise ValidationError("s0 and s1 must differ", "s1")

    @classmethod
    def nv_like(cls, detuning=0.0):
        """S=1 NV-like preset (m_s = 0 and -1)."""
        return cls(0.0, -1.0, detuning)

    @classmethod
    def spin_half(cls, detuning=0.0):
        """S=1/2 preset, e.g. group-IV defects (m_s = -1/2 and +1/2)."""
        return cls(-0.5, 0.5, detuning)


@dataclass(frozen=True)
class Environment:
    """Field (T) and relaxation times (s).

    ``stretch_m`` is the Ramsey decay exponent and ``t2_scaling_exponent``
    sets ``T2(N) = t2 * N**t2_scaling_exponent`` for decoupling sequences.
    """

    b_field: float
    t1: float = 1.0
    t2: float = 100e-6
    t2_star: float = 5e-6
    stretch_m: float = 2.0
    t2_scaling_exponent: float = 0.0

    def __post_init__(self):
        for name in ("b_field", "t1", "t2", "t2_star", "stretch_m", "t2_scaling_exponent"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        if self.b_field < 0:
            raise ValidationError(f"b_field must be >= 0, got {self.b_field}", "b_field")
        for name in ("t1", "t2", "t2_star"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0", name)

    def t2_for_pulses(self, pulses_n):
        return self.t2 * float(pulses_n) ** self.t2_scaling_exponent


@dataclass(frozen=True)
class Register:
    electron: ElectronSpin
    environment: Environment
    spins: tuple[NuclearSpin, ...] = ()

    def __post_init__(self):
        spins = tuple(self.spins)
        object.__setattr__(self, "spins", spins)
        seen = set()
        for spin in spins:
            if spin.label in seen:
                raise ValidationError(f"duplicate spin label {spin.label!r}", "spins.label")
            seen.add(spin.label)

    def __len__(self):
        return len(self.spins)

    @property
    def labels(self):
        return [s.label for s in self.spins]

    def with_spins(self, spins: Iterable[NuclearSpin]) -> "Register":
        return replace(self, spins=tuple(spins))

    def with_electron(self, electron: ElectronSpin) -> "Register":
        return replace(self, electron=electron)

    def with_environment(self, **changes) -> "Register":
        return replace(self, environment=replace(self.environment, **changes))

    def coupling_arrays(self):
        """Return ``(a_zz, a_zx, gamma_n)`` arrays in Hz and Hz/T."""
        a_zz = np.array([s.a_zz for s in self.spins], dtype=float)
        a_zx = np.array([s.a_zx for s in self.spins], dtype=float)
        gamma = np.array([s.gamma_n for s in self.spins], dtype=float)
        return a_zz, a_zx, gamma

    def larmor_angular(self):
        """Per-spin Larmor frequencies in rad/s."""
        return np.array([larmor_frequency(s, self.environment.b_field) for s in self.spins], dtype=float)

    def to_dict(self):
        e, env = self.electron, self.environment
        return {
            "electron": {"s0": e.s0, "s1": e.s1, "detuning_hz": e.detuning},
            "environment": {
                "b_field_t": env.b_field,
                "t1_s": env.t1,
                "t2_s": env.t2,
                "t2_star_s": env.t2_star,
                "stretch_m": env.stretch_m,
                "t2_scaling_exponent": env.t2_scaling_exponent,
            },
            "spins": [
                {
                    "label": s.label,
                    "a_zz_hz": s.a_zz,
                    "a_zx_hz": s.a_zx,
                    "gamma_n_hz_per_t": s.gamma_n,
                    "species": s.species,
                }
                for s in self.spins
            ],
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON encoding."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class DerivedSpinFrame:
    """Per-nucleus quantities derived from the couplings; all ``omega``/``a_*`` in rad/s.

    ``k_mod`` is the echo/decoupling modulation amplitude, ``k_depth`` the
    ESEEM modulation depth (``k_mod**2``).
    """

    omega_l: float
    omega_0: float
    omega_1: float
    n0: tuple[float, float, float]
    n1: tuple[float, float, float]
    axes_dot: float
    k_mod: float
    k_depth: float
    eta: float
    eta_alpha: float
    eta_beta: float
    a_zz: float = 0.0
    a_zx: float = 0.0
    s0: float = 0.0
    s1: float = -1.0

    @property
    def omega_alpha(self):
        return self.omega_0

    @property
    def omega_beta(self):
        return self.omega_1


def larmor_frequency(spin: NuclearSpin, b_field: float) -> float:
    """Angular Larmor frequency ``2*pi*gamma_n*B`` in rad/s."""
    return TWO_PI * spin.gamma_n * b_field


def frame_arrays(a_zz_hz, a_zx_hz, omega_l, s0, s1):
    """Vectorised frame derivation.

    Parameters
    ----------
    a_zz_hz, a_zx_hz : array_like
        Hyperfine components in Hz (converted to rad/s here).
    omega_l : array_like
        Larmor frequencies in rad/s.
    s0, s1 : float
        Electron projections.

    Returns
    -------
    dict of ndarray
        Keys ``omega_0, omega_1, axes_dot, k_mod, k_depth, eta, eta_alpha,
        eta_beta, n0z, n1z, n0x, n1x, a_zz, a_zx``.

    Raises
    ------
    DegenerateFrameError
        If any precession frequency is zero.
    """
    a_zz = TWO_PI * np.asarray(a_zz_hz, dtype=float)
    a_zx = TWO_PI * np.asarray(a_zx_hz, dtype=float)
    omega_l = np.asarray(omega_l, dtype=float)
    par0 = omega_l + s0 * a_zz
    par1 = omega_l + s1 * a_zz
    perp0 = s0 * a_zx
    perp1 = s1 * a_zx
    w0 = np.hypot(par0, perp0)
    w1 = np.hypot(par1, perp1)
    if np.any(w0 == 0) or np.any(w1 == 0):
        raise DegenerateFrameError("nuclear precession frequency is zero (level crossing)")
    n0x, n0z = perp0 / w0, par0 / w0
    n1x, n1z = perp1 / w1, par1 / w1
    dot = n0x * n1x + n0z * n1z
    k_mod = (s1 - s0) * omega_l * a_zx / (w0 * w1)
    eta_a = np.arctan2(perp0, par0)
    eta_b = np.arctan2(perp1, par1)
    eta = 0.5 * (eta_a - eta_b)
    return {
        "omega_0": w0,
        "omega_1": w1,
        "axes_dot": dot,
        "k_mod": k_mod,
        "k_depth": k_mod * k_mod,
        "eta": eta,
        "eta_alpha": eta_a,
        "eta_beta": eta_b,
        "n0x": n0x,
        "n0z": n0z,
        "n1x": n1x,
        "n1z": n1z,
        "a_zz": a_zz,
        "a_zx": a_zx,
    }


def derive_frame(spin: NuclearSpin, electron: ElectronSpin, b_field: float) -> DerivedSpinFrame:
    omega_l = larmor_frequency(spin, b_field)
    f = frame_arrays([spin.a_zz], [spin.a_zx], [omega_l], electron.s0, electron.s1)
    g = {k: float(v[0]) for k, v in f.items()}
    return DerivedSpinFrame(
        omega_l=omega_l,
        omega_0=g["omega_0"],
        omega_1=g["omega_1"],
        n0=(g["n0x"], 0.0, g["n0z"]),
        n1=(g["n1x"], 0.0, g["n1z"]),
        axes_dot=g["axes_dot"],
        k_mod=g["k_mod"],
        k_depth=g["k_depth"],
        eta=g["eta"],
        eta_alpha=g["eta_alpha"],
        eta_beta=g["eta_beta"],
        a_zz=g["a_zz"],
        a_zx=g["a_zx"],
        s0=electron.s0,
        s1=electron.s1,
    )


def register_frames(register: Register) -> list[DerivedSpinFrame]:
    b = register.environment.b_field
    return [derive_frame(s, register.electron, b) for s in register.spins]


# --- file I/O --------------------------------------------------------------


def _reject_constant(name):
    raise ParseError(f"non-finite number {name} is not allowed")


def _require(mapping, key, where):
    if not isinstance(mapping, dict):
        raise ValidationError(f"{where} must be an object", where)
    if key not in mapping:
        raise ValidationError(f"missing field {where}.{key}", f"{where}.{key}")
    return mapping[key]


def register_from_dict(data) -> Register:
    """Build a validated :class:`Register` from the JSON document structure."""
    if not isinstance(data, dict):
        raise ValidationError("register document must be an object", "<root>")
    e = _require(data, "electron", "<root>")
    env = _require(data, "environment", "<root>")
    spins_raw = data.get("spins", [])
    if not isinstance(spins_raw, list):
        raise ValidationError("spins must be a list", "spins")

    def wrap(where, build):
        try:
            return build()
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}", f"{where}.{exc.field}") from None

    electron = wrap(
        "electron",
        lambda: ElectronSpin(
            _require(e, "s0", "electron"), _require(e, "s1", "electron"), e.get("detuning_hz", 0.0)
        ),
    )
    environment = wrap(
        "environment",
        lambda: Environment(
            b_field=_require(env, "b_field_t", "environment"),
            t1=env.get("t1_s", 1.0),
            t2=env.get("t2_s", 100e-6),
            t2_star=env.get("t2_star_s", 5e-6),
            stretch_m=env.get("stretch_m", 2.0),
            t2_scaling_exponent=env.get("t2_scaling_exponent", 0.0),
        ),
    )
    spins = []
    for i, s in enumerate(spins_raw):
        where = f"spins[{i}]"
        spins.append(
            wrap(
                where,
                lambda s=s, where=where: NuclearSpin(
                    label=str(_require(s, "label", where)),
                    a_zz=_require(s, "a_zz_hz", where),
                    a_zx=_require(s, "a_zx_hz", where),
                    gamma_n=s.get("gamma_n_hz_per_t", GAMMA_C13),
                    species=str(s.get("species", "13C")),
                ),
            )
        )
    return Register(electron, environment, tuple(spins))


def load_register(path) -> Register:
    """Read a register JSON file.

    Raises
    ------
    ParseError
        Malformed JSON or a NaN/Infinity literal.
    ValidationError
        An invariant is violated; ``exc.field`` names the offending field.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return register_from_dict(data)


def dump_register(register: Register, path) -> None:
    Path(path).write_text(json.dumps(register.to_dict(), indent=2) + "\n")


def preset_path(name: str) -> Path:
    """Path of a register shipped in ``spinscope/data``."""
    return Path(__file__).parent / "data" / f"{name}.json"


def load_preset(name: str) -> Register:
    return load_register(preset_path(name))


def make_register(couplings: Sequence[tuple[float, float]], electron=None, b_field=None,
                  larmor_hz=5e5, gamma_n=GAMMA_C13, **env) -> Register:
    """Convenience constructor from ``(a_zz, a_zx)`` pairs in Hz.

    The field defaults to the value giving a ``larmor_hz`` Larmor frequency for ``gamma_n``.
    """
    electron = electron or ElectronSpin.nv_like()
    if b_field is None:
        b_field = larmor_hz / gamma_n
    spins = [NuclearSpin(f"n{i}", azz, azx, gamma_n) for i, (azz, azx) in enumerate(couplings)]
    return Register(electron, Environment(b_field=b_field, **env), tuple(spins))
