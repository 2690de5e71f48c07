"""Exact simulator of ideal pulse sequences on electron two-level x nuclear spins.

The Hamiltonian is diagonal in the electron sublevels, so the density
matrix is stored as a ``(2, 2, d, d)`` array of electron blocks over the
``d = 2**n`` nuclear space. Pulses are instantaneous electron rotations;
free evolution applies ``exp(-i H_a t)`` on the left and ``exp(+i H_b t)``
on the right of block ``(a, b)``. Relaxation is not modelled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np

from .errors import SizeError, ValidationError
from .register import TWO_PI, Register

MAX_SPINS = 12

_IX = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
_IZ = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)
_I2 = np.eye(2, dtype=complex)

PROTOCOLS = ("ramsey", "hahn", "dd", "5p_eseem", "dd_eseem")


@dataclass(frozen=True)
class Pulse:
    """Ideal instantaneous electron rotation by ``angle`` about ``axis`` (x or y)."""

    angle: float
    axis: str = "x"
    target: str = "electron"

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValidationError(f"pulse axis must be 'x' or 'y', got {self.axis!r}", "axis")
        if not (-TWO_PI < self.angle <= TWO_PI):
            raise ValidationError(f"pulse angle {self.angle} outside (-2pi, 2pi]", "angle")
        if self.target != "electron":
            raise ValidationError("only electron pulses are supported", "target")


@dataclass(frozen=True)
class Delay:
    """Free evolution. ``dephase`` drops the electron coherence first (T >> T2* limit)."""

    duration: float
    dephase: bool = False

    def __post_init__(self):
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValidationError(f"delay must be finite and >= 0, got {self.duration}", "duration")


@dataclass(frozen=True)
class SequenceDescriptor:
    elements: tuple
    readout: str = "z"
    name: str = ""
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValidationError("sequence must contain at least one element", "elements")
        for el in self.elements:
            if not isinstance(el, (Pulse, Delay)):
                raise ValidationError(f"unknown sequence element {el!r}", "elements")
        if self.readout not in ("x", "y", "z"):
            raise ValidationError(f"readout must be x, y or z, got {self.readout!r}", "readout")

    @property
    def duration(self):
        return sum(el.duration for el in self.elements if isinstance(el, Delay))

    def pulse_count(self):
        return sum(isinstance(el, Pulse) for el in self.elements)


@dataclass(frozen=True)
class HamiltonianPair:
    """Nuclear Hamiltonians (rad/s) for the two electron sublevels plus the electron phase rates."""

    h0: np.ndarray
    h1: np.ndarray
    electron_phases: tuple[float, float]

    @property
    def dim(self):
        return self.h0.shape[0]


def _embed(op, k, n):
    return reduce(np.kron, [op if j == k else _I2 for j in range(n)], np.eye(1, dtype=complex))


def build_hamiltonians(register: Register) -> HamiltonianPair:
    """Per-branch nuclear Hamiltonians ``sum_k (wL + s_i Azz) Iz + s_i Azx Ix`` on ``2**n`` dims."""
    n = len(register)
    if n > MAX_SPINS:
        raise SizeError(f"register has {n} spins; the oracle handles at most {MAX_SPINS}")
    d = 2**n
    e = register.electron
    hs = []
    for s in (e.s0, e.s1):
        h = np.zeros((d, d), dtype=complex)
        for k, spin in enumerate(register.spins):
            wl = TWO_PI * spin.gamma_n * register.environment.b_field
            h += (wl + s * TWO_PI * spin.a_zz) * _embed(_IZ, k, n)
            h += s * TWO_PI * spin.a_zx * _embed(_IX, k, n)
        hs.append(h)
    phases = (TWO_PI * e.detuning * e.s0, TWO_PI * e.detuning * e.s1)
    return HamiltonianPair(hs[0], hs[1], phases)


class _Engine:
    """Eigendecompositions of one HamiltonianPair, reused across simulations."""

    def __init__(self, pair: HamiltonianPair):
        self.pair = pair
        self.eig = [np.linalg.eigh(h) for h in (pair.h0, pair.h1)]

    def propagator(self, branch, t):
        w, v = self.eig[branch]
        phase = np.exp(-1j * (w + self.pair.electron_phases[branch]) * t)
        return (v * phase) @ v.conj().T


@lru_cache(maxsize=32)
def _engine(register: Register) -> _Engine:
    return _Engine(build_hamiltonians(register))


def propagator(register: Register, branch: int, t: float) -> np.ndarray:
    """``exp(-i (H_branch + electron phase) t)`` on the nuclear space."""
    return _engine(register).propagator(branch, t)


def _rotation(pulse: Pulse):
    phi = 0.0 if pulse.axis == "x" else 0.5 * math.pi
    c = math.cos(0.5 * pulse.angle)
    s = math.sin(0.5 * pulse.angle)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]], dtype=complex
    )


def _initial_state(d):
    rho = np.zeros((2, 2, d, d), dtype=complex)
    rho[0, 0] = np.eye(d) / d
    return rho


def _apply(engine: _Engine, rho, elements, cache):
    for el in elements:
        if isinstance(el, Pulse):
            r = _rotation(el)
            rho = np.einsum("ac,cdij,bd->abij", r, rho, r.conj())
        else:
            if el.dephase:
                rho = rho.copy()
                rho[0, 1] = 0.0
                rho[1, 0] = 0.0
            key = el.duration
            if key not in cache:
                cache[key] = (engine.propagator(0, key), engine.propagator(1, key))
            u = cache[key]
            rho = np.stack([
                np.stack([u[a] @ rho[a, b] @ u[b].conj().T for b in range(2)]) for a in range(2)
            ])
    return rho


def _readout(rho, axis):
    if axis == "z":
        value = np.trace(rho[0, 0]) - np.trace(rho[1, 1])
    elif axis == "x":
        value = 2.0 * np.trace(rho[1, 0]).real
    else:
        value = 2.0 * np.trace(rho[1, 0]).imag
    return float(np.real(value))


def simulate(register: Register, descriptor: SequenceDescriptor) -> float:
    """Expectation of the electron Pauli operator on ``descriptor.readout``.

    Starts from the ``s0`` electron state and a maximally mixed nuclear register.
    """
    engine = _engine(register)
    rho = _apply(engine, _initial_state(engine.pair.dim), descriptor.elements, {})
    return _readout(rho, descriptor.readout)


def simulate_many(register: Register, descriptors) -> np.ndarray:
    return np.array([simulate(register, d) for d in descriptors])


def pathway_contributions(register: Register, descriptor: SequenceDescriptor) -> dict:
    """Split the signal of a sequence with a dephasing delay into electron pathways.

    The state just before the pulse preceding the first dephasing delay is
    decomposed into its four electron blocks, and the state during the delay
    into its two electron sublevels. Each ``((a, b), branch)`` combination is
    propagated separately; the values sum to :func:`simulate`.
    """
    idx = next(
        (i for i, el in enumerate(descriptor.elements) if isinstance(el, Delay) and el.dephase), None
    )
    if idx is None or idx == 0 or not isinstance(descriptor.elements[idx - 1], Pulse):
        raise ValidationError("descriptor needs a pulse followed by a dephasing delay", "elements")
    engine = _engine(register)
    cache = {}
    before = _apply(engine, _initial_state(engine.pair.dim), descriptor.elements[: idx - 1], cache)
    storage = descriptor.elements[idx - 1]
    rest = descriptor.elements[idx:]
    out = {}
    for a in range(2):
        for b in range(2):
            block = np.zeros_like(before)
            block[a, b] = before[a, b]
            stored = _apply(engine, block, (storage,), cache)
            for branch in range(2):
                part = np.zeros_like(stored)
                part[branch, branch] = stored[branch, branch]
                out[((a, b), branch)] = _readout(_apply(engine, part, rest, cache), descriptor.readout)
    return out


# --- canonical sequences ------------------------------------------------------

_HALF = 0.5 * math.pi


def _require(params, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ValidationError(f"missing sequence parameters: {', '.join(missing)}", missing[0])
    return [params[n] for n in names]


def _cpmg_block(tau, pulses_n):
    """``tau - pi - 2tau - pi - ... - pi - tau`` with ``pulses_n`` x pulses."""
    out = [Delay(tau)]
    for i in range(pulses_n):
        out.append(Pulse(math.pi))
        out.append(Delay(tau if i == pulses_n - 1 else 2 * tau))
    return out


def _closing(pulses_n):
    # Closing pi/2 sign chosen so the bare sequence nets a multiple of 2 pi.
    return Pulse(-_HALF if pulses_n % 2 == 0 else _HALF)


def make_descriptor(protocol: str, **params) -> SequenceDescriptor:
    """Canonical sequence for ``protocol``.

    ======== ===========================================================
    ramsey   ``pi/2_x, tau, -pi/2_x``
    hahn     ``pi/2_x, tau, pi_x, tau, pi/2_x``
    dd       ``pi/2_x, tau, (pi_x, 2tau)^(N-1), pi_x, tau, -/+pi/2_x``
    5p_eseem ``pi/2_x, tau1, pi_x, tau1, pi/2_y, T, -pi/2_y, tau2, pi_x, tau2, pi/2_x``
    dd_eseem as 5p_eseem with each single pi replaced by an N-pulse CPMG block
    ======== ===========================================================

    The closing pulse of Ramsey/DD is chosen so that the bare electron ends in
    ``s0`` (signal +1). In the correlation sequences the storage pulses are
    y-phased and the free evolution ``T`` dephases the electron coherence.
    """
    protocol = protocol.replace("-", "_").lower()
    opening = Pulse(_HALF)
    if protocol == "ramsey":
        (tau,) = _require(params, "tau")
        els = [opening, Delay(tau), _closing(0)]
    elif protocol == "hahn":
        (tau,) = _require(params, "tau")
        els = [opening, *_cpmg_block(tau, 1), _closing(1)]
    elif protocol == "dd":
        tau, n = _require(params, "tau", "pulses_n")
        n = int(n)
        if n < 1:
            raise ValidationError("pulses_n must be >= 1", "pulses_n")
        els = [opening, *_cpmg_block(tau, n), _closing(n)]
    elif protocol in ("5p_eseem", "dd_eseem"):
        tau1, tau2, t_free = _require(params, "tau1", "tau2", "t_free")
        n = 1 if protocol == "5p_eseem" else int(_require(params, "pulses_n")[0])
        if n < 1:
            raise ValidationError("pulses_n must be >= 1", "pulses_n")
        els = [
            opening,
            *_cpmg_block(tau1, n),
            Pulse(_HALF, "y"),
            Delay(t_free, dephase=True),
            Pulse(-_HALF, "y"),
            *_cpmg_block(tau2, n),
            Pulse(_HALF),
        ]
    else:
        raise ValidationError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}", "protocol")
    return SequenceDescriptor(tuple(els), "z", protocol, dict(params))
