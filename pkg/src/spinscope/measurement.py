"""Photon-counting readout model and synthetic measurement records.

Each shot projects the electron to the bright state with probability ``p``;
bright shots emit Poisson(``photons_bright``) photons and dark shots
Poisson(``photons_dark``). The estimate ``p_hat`` inverts the mean photon
number linearly.

Random numbers come from NumPy's Philox4x64-10 counter-based generator keyed
by ``(seed, point index)``, so each sweep point has its own stream and the
result does not depend on evaluation order or thread count.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, ParseError, ValidationError
from .protocols import Protocol
from .register import Register

PRNG_NAME = "numpy.random.Philox(key=(seed, point_index))"
PROBABILITY_TOLERANCE = 1e-9
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseConfig:
    reps: int = 10_000
    photons_bright: float = 3.0
    photons_dark: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValidationError("reps must be an integer >= 1", "reps")
        if not (self.photons_bright > self.photons_dark >= 0):
            raise ValidationError("need photons_bright > photons_dark >= 0", "photons_bright")
        if int(self.seed) != self.seed:
            raise ValidationError("seed must be an integer", "seed")


def probability_from_signal(sigma_z):
    """``p = (1 + sigma_z)/2``; inputs up to 1e-9 outside [-1, 1] are clamped."""
    s = np.asarray(sigma_z, dtype=float)
    if np.any(np.abs(s) > 1.0 + PROBABILITY_TOLERANCE) or np.any(np.isnan(s)):
        raise DomainError("signal outside [-1, 1]")
    p = 0.5 * (1.0 + np.clip(s, -1.0, 1.0))
    return float(p) if p.ndim == 0 else p


def _generator(seed, index):
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, int(index) & _MASK64]))


def sample_point(p: float, cfg: NoiseConfig, index: int = 0) -> float:
    """One photon-count estimate ``p_hat`` of ``p`` from ``cfg.reps`` shots."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"probability {p} outside [0, 1]")
    rng = _generator(cfg.seed, index)
    bright = int(rng.binomial(cfg.reps, p))
    photons = rng.poisson(cfg.photons_bright * bright) + rng.poisson(cfg.photons_dark * (cfg.reps - bright))
    p_hat = (photons / cfg.reps - cfg.photons_dark) / (cfg.photons_bright - cfg.photons_dark)
    return min(1.0, max(0.0, p_hat))


def predicted_std(p, cfg: NoiseConfig):
    """Delta-method standard deviation of ``p_hat`` (before clamping).

    Var(photons)/reps = p(1-p)(nb-nd)^2 + p nb + (1-p) nd (binomial + Poisson).
    """
    p = np.asarray(p, dtype=float)
    nb, nd = cfg.photons_bright, cfg.photons_dark
    var = (p * (1 - p) * (nb - nd) ** 2 + p * nb + (1 - p) * nd) / cfg.reps
    return np.sqrt(var) / (nb - nd)


@dataclass
class Trace:
    sweep_name: str
    sweep_values: list
    values: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sweep_values) != len(self.values):
            raise ValidationError("sweep_values and values differ in length", "values")
        if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
            raise ValidationError("sweep values must be strictly increasing", "sweep_values")

    def as_arrays(self):
        return np.asarray(self.sweep_values, dtype=float), np.asarray(self.values, dtype=float)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Trace":
        try:
            data = json.loads(text)
            return cls(data["sweep_name"], data["sweep_values"], data["values"], data.get("meta", {}))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"not a trace file: {exc}") from exc

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())


def measurement_time(protocol: Protocol, grid, reps: int) -> float:
    """Total acquisition time ``reps * sum(sequence durations)``; no overheads."""
    return float(reps * np.sum(protocol.duration(grid)))


def synthesize_trace(register: Register, protocol: Protocol, grid, cfg: NoiseConfig | None = None,
                     threads: int = 1) -> Trace:
    """Protocol signal on ``grid`` as bright-state probabilities, optionally sampled.

    ``cfg=None`` gives the noiseless trace.
    """
    grid = protocol.check_grid(grid)
    p = probability_from_signal(np.atleast_1d(protocol.evaluate(register, grid)))
    if cfg is not None:
        def one(i):
            return sample_point(float(p[i]), cfg, i)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                p = np.array(list(pool.map(one, range(len(p)))))
        else:
            p = np.array([one(i) for i in range(len(p))])
    meta = {
        "register_digest": register.digest(),
        "protocol": protocol.to_dict(),
        "noise": None if cfg is None else {**asdict(cfg), "prng": PRNG_NAME},
        "version": __version__,
    }
    if cfg is not None:
        meta["measurement_time_s"] = measurement_time(protocol, grid, cfg.reps)
    sweep = [int(g) for g in grid] if protocol.sweep == "N" else [float(g) for g in grid]
    return Trace(protocol.sweep, sweep, [float(v) for v in p], meta)


def sample_std(p: float, cfg: NoiseConfig, n_seeds: int) -> float:
    """Empirical std of ``p_hat`` over seeds ``cfg.seed .. cfg.seed + n_seeds - 1``."""
    draws = [sample_point(p, NoiseConfig(cfg.reps, cfg.photons_bright, cfg.photons_dark, cfg.seed + k))
             for k in range(n_seeds)]
    return float(np.std(draws, ddof=1))
