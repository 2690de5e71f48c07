"""Named protocols with a single swept variable.

A :class:`Protocol` maps a sweep grid to ``<sigma_z>`` values. It can also be
evaluated on raw coupling arrays, which is how the estimation module perturbs
individual hyperfine parameters without building validated registers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import signals
from .errors import ValidationError
from .register import NuclearSpin, Register

NAMES = ("ramsey", "hahn", "dd", "dd_summation", "5p_eseem", "dd_eseem")
_SWEEPS = {
    "ramsey": ("tau",),
    "hahn": ("tau",),
    "dd": ("tau", "N"),
    "dd_summation": ("tau", "N"),
    "5p_eseem": ("T", "tau"),
    "dd_eseem": ("T", "tau"),
}


@dataclass(frozen=True)
class Protocol:
    """Protocol name, swept variable and the fixed sequence parameters.

    Sweeps: ``tau`` for Ramsey/Hahn/DD, ``N`` for DD at fixed ``tau``, and
    ``T`` (free evolution) or ``tau`` (``tau1 = tau2``, fixed ``t_free``) for
    the correlation sequences.
    """

    name: str
    sweep: str | None = None
    pulses_n: int = 16
    tau: float | None = None
    tau1: float | None = None
    tau2: float | None = None
    t_free: float | None = None
    include_decay: bool = False

    def __post_init__(self):
        name = self.name.replace("-", "_").lower()
        if name not in NAMES:
            raise ValidationError(f"unknown protocol {self.name!r}; expected one of {NAMES}", "protocol")
        object.__setattr__(self, "name", name)
        sweep = self.sweep or _SWEEPS[name][0]
        if sweep not in _SWEEPS[name]:
            raise ValidationError(f"{name} cannot sweep {sweep!r}; allowed {_SWEEPS[name]}", "sweep")
        object.__setattr__(self, "sweep", sweep)
        n = self.pulses_n
        if int(n) != n or n < 1:
            raise ValidationError("pulses_n must be a positive integer", "pulses_n")
        if name in ("dd", "dd_summation") and sweep == "tau":
            signals._check_even(int(n))
        if name == "dd_eseem" and n > 1 and n % 2:
            raise ValidationError("pulses_n must be 1 or even for dd_eseem", "pulses_n")
        if name in ("dd", "dd_summation") and sweep == "N" and self.tau is None:
            raise ValidationError("an N sweep needs a fixed tau", "tau")
        if name in ("5p_eseem", "dd_eseem"):
            if sweep == "T" and (self.tau1 is None or self.tau2 is None):
                raise ValidationError("a T sweep needs tau1 and tau2", "tau1")
            if sweep == "tau" and self.t_free is None:
                raise ValidationError("a tau sweep needs a fixed t_free", "t_free")
        for fld in ("tau", "tau1", "tau2", "t_free"):
            v = getattr(self, fld)
            if v is not None and not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{fld} must be finite and >= 0", fld)

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def check_grid(self, grid):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValidationError("sweep grid must be a non-empty 1-D array", "grid")
        if not np.all(np.isfinite(grid)) or np.any(grid < 0):
            raise ValidationError("sweep grid must be finite and >= 0", "grid")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValidationError("sweep grid must be strictly increasing", "grid")
        if self.sweep == "N":
            if np.any(grid != np.round(grid)) or np.any(grid < 2) or np.any(grid % 2):
                raise ValidationError("N sweep needs even pulse counts >= 2", "grid")
        return grid

    def _timing(self, grid):
        if self.sweep == "T":
            return grid * 0 + self.tau1, grid * 0 + self.tau2, grid
        return grid, grid, grid * 0 + self.t_free

    def duration(self, grid):
        """Total free-evolution time of one shot at each grid point (s)."""
        grid = np.asarray(grid, dtype=float)
        if self.name == "ramsey":
            return grid.copy()
        if self.name == "hahn":
            return 2 * grid
        if self.name in ("dd", "dd_summation"):
            return 2 * grid * self.pulses_n if self.sweep == "tau" else 2 * self.tau * grid
        t1, t2, tf = self._timing(grid)
        n = 1 if self.name == "5p_eseem" else self.pulses_n
        return 2 * n * (t1 + t2) + tf

    def evaluate(self, register: Register, grid, couplings=None):
        """``<sigma_z>`` over ``grid``.

        ``couplings`` optionally replaces the register's ``(a_zz, a_zx)``
        arrays (Hz); signals are even in ``a_zx``, so negative values from
        finite-difference perturbations are allowed.
        """
        grid = self.check_grid(grid)
        env = register.environment
        if self.name == "dd_eseem":
            reg = register
            if couplings is not None:
                a_zz, a_zx = (np.asarray(c, dtype=float) for c in couplings)
                reg = register.with_spins(
                    NuclearSpin(s.label, z, abs(x), s.gamma_n, s.species)
                    for s, z, x in zip(register.spins, a_zz, a_zx)
                )
            t1, t2, tf = self._timing(grid)
            opts = signals.SignalOptions(include_decay=self.include_decay)
            return signals.dd_eseem(reg, signals.EseemTiming(t1, t2, tf), self.pulses_n, opts)
        if couplings is None:
            p = signals.spin_params(register)
        else:
            a_zz, a_zx = couplings
            p = signals.spin_params_from(
                np.asarray(a_zz, dtype=float), np.asarray(a_zx, dtype=float),
                register.larmor_angular(), register.electron,
            )
        decay = self.include_decay
        if self.name == "ramsey":
            return signals.ramsey_values(p, register.electron, env, grid, decay)
        if self.name == "hahn":
            return signals.hahn_values(p, env, grid, decay)
        if self.name in ("dd", "dd_summation"):
            summ = self.name == "dd_summation"
            if self.sweep == "tau":
                return signals.dd_values(p, env, grid, self.pulses_n, decay, summ)
            return np.array([
                signals.dd_values(p, env, np.array([self.tau]), int(n), decay, summ)[0] for n in grid
            ])
        t1, t2, tf = self._timing(grid)
        return signals.five_pulse_values(p, env, t1, t2, tf, decay)
