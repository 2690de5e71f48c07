"""Fisher information, Cramer-Rao bounds, analytic sensitivities, detectability
and covariance ellipses over the hyperfine parameter vector.

Parameter order is ``[a_zz(0..n-1), a_zx(0..n-1)]`` in Hz.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import __version__
from .errors import ParseError, ValidationError
from .measurement import probability_from_signal
from .protocols import Protocol
from .register import DerivedSpinFrame, ElectronSpin, Environment, Register

P_FLOOR = 1e-6
PINV_CUTOFF = 1e-10
MIN_STEP_HZ = 10.0
REL_STEP = 1e-4
RICHARDSON_TOLERANCE = 0.01


class ProbabilityClampWarning(UserWarning):
    """More than 1% of grid points had p clamped away from 0 or 1."""


def param_vector(register: Register) -> np.ndarray:
    a_zz, a_zx, _ = register.coupling_arrays()
    return np.concatenate([a_zz, a_zx])


def param_names(register: Register) -> list[str]:
    return [f"a_zz[{l}]" for l in register.labels] + [f"a_zx[{l}]" for l in register.labels]


def default_steps(params) -> np.ndarray:
    return np.maximum(MIN_STEP_HZ, REL_STEP * np.abs(params))


def _derivatives(register, protocol, grid, steps, threads):
    params = param_vector(register)
    n = len(register)

    def prob(vec):
        return 0.5 * (1.0 + np.atleast_1d(protocol.evaluate(register, grid, (vec[:n], vec[n:]))))

    def column(i):
        up, dn = params.copy(), params.copy()
        up[i] += steps[i]
        dn[i] -= steps[i]
        return (prob(up) - prob(dn)) / (2.0 * steps[i])

    idx = range(params.size)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            cols = list(pool.map(column, idx))
    else:
        cols = [column(i) for i in idx]
    return np.stack(cols, axis=1) if cols else np.zeros((len(grid), 0))


def _assemble(deriv, p):
    w = 1.0 / (p * (1.0 - p))
    full = deriv.T @ (deriv * w[:, None])
    upper = np.triu(full)
    return upper + np.triu(full, 1).T


class FimInfo(NamedTuple):
    fim: np.ndarray
    clamped_fraction: float
    steps: np.ndarray
    flagged: np.ndarray | None


def fisher_matrix(register: Register, protocol: Protocol, grid, fd_step=None, threads: int = 1,
                  richardson: bool = False) -> FimInfo:
    """Fisher information ``sum_t (dp/dA_i)(dp/dA_j) / (p(1-p))`` over ``grid``.

    ``p = (1 + <sigma_z>)/2``; derivatives are central differences with step
    ``fd_step`` (scalar or per-parameter array, Hz). With ``richardson`` the
    matrix is recomputed at half step and parameters whose diagonal entry
    moves by more than 1% are returned in ``flagged``.
    """
    grid = protocol.check_grid(grid)
    params = param_vector(register)
    if fd_step is None:
        steps = default_steps(params)
    else:
        steps = np.broadcast_to(np.asarray(fd_step, dtype=float), params.shape).copy()
    if np.any(steps <= 0):
        raise ValidationError("fd_step must be > 0", "fd_step")
    p_raw = probability_from_signal(np.atleast_1d(protocol.evaluate(register, grid)))
    p = np.clip(p_raw, P_FLOOR, 1.0 - P_FLOOR)
    clamped = float(np.mean(p != p_raw))
    if clamped > 0.01:
        warnings.warn(f"p clamped on {clamped:.1%} of grid points", ProbabilityClampWarning, stacklevel=2)
    fim = _assemble(_derivatives(register, protocol, grid, steps, threads), p)
    flagged = None
    if richardson:
        half = _assemble(_derivatives(register, protocol, grid, steps / 2, threads), p)
        d, dh = np.diag(fim), np.diag(half)
        scale = np.maximum(np.abs(dh), 1e-300)
        flagged = np.flatnonzero((np.abs(d - dh) > RICHARDSON_TOLERANCE * scale) & (dh > 1e-12 * dh.max(initial=0)))
    return FimInfo(fim, clamped, steps, flagged)


class CramerRao(NamedTuple):
    crb: np.ndarray
    bounds: np.ndarray
    null_space: np.ndarray
    rank: int


def cramer_rao(fim, reps: int) -> CramerRao:
    """``pinv(F)/reps`` with eigenvalues below ``1e-10 * lambda_max`` treated as null.

    ``null_space`` holds the null directions as rows; their bounds are ``inf``.
    """
    if int(reps) != reps or reps < 1:
        raise ValidationError("reps must be an integer >= 1", "reps")
    fim = np.asarray(fim, dtype=float)
    lam, vec = np.linalg.eigh(0.5 * (fim + fim.T))
    top = lam.max(initial=0.0)
    keep = lam > PINV_CUTOFF * top if top > 0 else np.zeros_like(lam, dtype=bool)
    inv = (vec[:, keep] / lam[keep]) @ vec[:, keep].T
    crb = inv / reps
    null = vec[:, ~keep].T
    bounds = np.sqrt(np.clip(np.diag(crb), 0.0, None))
    if null.size:
        touched = np.any(np.abs(null) > 1e-8, axis=0)
        bounds = np.where(touched, np.inf, bounds)
    return CramerRao(crb, bounds, null, int(keep.sum()))


def describe_null_space(null_space, names, tol=1e-6) -> list[str]:
    """Human-readable linear combinations, e.g. ``+0.707*a_zz[n0] -0.707*a_zz[n1]``."""
    out = []
    for v in np.atleast_2d(null_space):
        if v.size == 0:
            continue
        k = np.argmax(np.abs(v))
        v = v * np.sign(v[k])
        out.append(" ".join(f"{c:+.3f}*{names[i]}" for i, c in enumerate(v) if abs(c) > tol))
    return out


# --- analytic sensitivities -----------------------------------------------


class Sensitivity(NamedTuple):
    value: float
    bound: float
    degenerate: bool


def sensitivity_dd_s1(frame: DerivedSpinFrame, electron: ElectronSpin, t2: float, tau_p=None) -> Sensitivity:
    """Resolvable ``a_zz`` difference (Hz) for decoupling on an S=1-like electron.

    ``value = (2/tau_p)(A_zx/w_L)``; ``bound`` uses ``tau_p = T2/2``. A zero
    ``A_zx`` leaves no dip and is flagged as degenerate.
    """
    if frame.omega_l <= 0:
        raise ValidationError("sensitivity needs a positive Larmor frequency", "b_field")
    ratio = abs(frame.a_zx) / frame.omega_l
    bound = 4.0 / t2 * ratio
    value = bound if tau_p is None else 2.0 / tau_p * ratio
    return Sensitivity(value, bound, ratio == 0.0)


def sensitivity_dd_s_half(environment: Environment, tau_k=None) -> Sensitivity:
    """Resolvable ``a_zx`` difference (Hz) for decoupling with ``s0 = -s1``.

    ``value = 4/tau_k`` and ``bound = 8/T2``.
    """
    bound = 8.0 / environment.t2
    value = bound if tau_k is None else 4.0 / tau_k
    return Sensitivity(value, bound, False)


# --- detectability and ellipses --------------------------------------------


def classify_detectability(register: Register, bounds, metric: str = "per_type") -> list[bool]:
    """Per-spin detectable flag from the per-parameter CRB ``bounds`` (Hz).

    A spin is detectable if some parameter's bound is below both its magnitude
    and the distance to the nearest other spin. ``per_type`` measures that
    distance within the same parameter type; ``euclidean`` uses the 2-D
    ``(a_zz, a_zx)`` distance.
    """
    if metric not in ("per_type", "euclidean"):
        raise ValidationError("metric must be 'per_type' or 'euclidean'", "metric")
    a_zz, a_zx, _ = register.coupling_arrays()
    n = len(register)
    bounds = np.asarray(bounds, dtype=float)
    values = (a_zz, a_zx)
    out = []
    for j in range(n):
        others = np.arange(n) != j
        flag = False
        for t in range(2):
            sigma = bounds[t * n + j]
            if metric == "per_type":
                gap = np.min(np.abs(values[t][others] - values[t][j]), initial=np.inf)
            else:
                gap = np.min(np.hypot(a_zz[others] - a_zz[j], a_zx[others] - a_zx[j]), initial=np.inf)
            if sigma < abs(values[t][j]) and sigma < gap:
                flag = True
        out.append(flag)
    return out


@dataclass(frozen=True)
class Ellipse:
    """Worst covariance partner of one spin, drawn between the two spins.

    ``vertex_a``/``vertex_b`` are the ``(a_zz, a_zx)`` locations of the spin and
    its partner; ``semi_minor`` is ``sqrt(|covariance|)``, so zero covariance
    collapses the ellipse to a line. ``self_bound`` is the spin's own CRB pair.
    """

    spin: int
    partner: int | None
    params: tuple[int, int] | None
    covariance: float
    vertex_a: tuple[float, float]
    vertex_b: tuple[float, float]
    semi_major: float
    semi_minor: float
    self_bound: tuple[float, float]


def covariance_ellipses(crb, params) -> list[Ellipse]:
    crb = np.asarray(crb, dtype=float)
    params = np.asarray(params, dtype=float)
    n = params.size // 2
    a_zz, a_zx = params[:n], params[n:]
    out = []
    for j in range(n):
        best, best_val = None, -1.0
        for k in range(n):
            if k == j:
                continue
            for pj in (j, n + j):
                for pk in (k, n + k):
                    v = abs(crb[pj, pk])
                    if v > best_val:
                        best, best_val = (k, pj, pk), v
        self_bound = (math.sqrt(max(crb[j, j], 0.0)), math.sqrt(max(crb[n + j, n + j], 0.0)))
        a = (float(a_zz[j]), float(a_zx[j]))
        if best is None:
            out.append(Ellipse(j, None, None, 0.0, a, a, 0.0, 0.0, self_bound))
            continue
        k, pj, pk = best
        b = (float(a_zz[k]), float(a_zx[k]))
        cov = float(crb[pj, pk])
        out.append(Ellipse(j, k, (pj, pk), cov, a, b, 0.5 * math.dist(a, b), math.sqrt(abs(cov)), self_bound))
    return out


# --- result bundle ---------------------------------------------------------


@dataclass
class FisherResult:
    fim: np.ndarray
    crb: np.ndarray
    bounds: np.ndarray
    detectable: list
    ellipses: list
    null_space: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = {
            "fim": self.fim.tolist(),
            "crb": self.crb.tolist(),
            "bounds": [None if not math.isfinite(b) else b for b in self.bounds.tolist()],
            "detectable": list(map(bool, self.detectable)),
            "ellipses": [e.__dict__ for e in self.ellipses],
            "null_space": self.null_space,
            "provenance": self.provenance,
        }
        return json.dumps(data, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FisherResult":
        try:
            d = json.loads(text)
            ellipses = [
                Ellipse(**{**e, "params": tuple(e["params"]) if e["params"] else None,
                           "vertex_a": tuple(e["vertex_a"]), "vertex_b": tuple(e["vertex_b"]),
                           "self_bound": tuple(e["self_bound"])})
                for e in d["ellipses"]
            ]
            bounds = np.array([np.inf if b is None else b for b in d["bounds"]], dtype=float)
            return cls(np.array(d["fim"], dtype=float), np.array(d["crb"], dtype=float), bounds,
                       d["detectable"], ellipses, d.get("null_space", []), d.get("provenance", {}))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"not a Fisher result file: {exc}") from exc


def fisher_analysis(register: Register, protocol: Protocol, grid, reps: int = 10_000, fd_step=None,
                    metric: str = "per_type", threads: int = 1) -> FisherResult:
    """FIM, CRB, detectability and ellipses in one pass."""
    grid = protocol.check_grid(grid)
    info = fisher_matrix(register, protocol, grid, fd_step, threads)
    cr = cramer_rao(info.fim, reps)
    names = param_names(register)
    prov = {
        "register_digest": register.digest(),
        "protocol": protocol.to_dict(),
        "grid": {"start": float(grid[0]), "stop": float(grid[-1]), "points": int(grid.size)},
        "fd_step": info.steps.tolist(),
        "reps": int(reps),
        "metric": metric,
        "parameters": names,
        "clamped_fraction": info.clamped_fraction,
        "version": __version__,
    }
    return FisherResult(
        info.fim, cr.crb, cr.bounds,
        classify_detectability(register, cr.bounds, metric),
        covariance_ellipses(cr.crb, param_vector(register)),
        describe_null_space(cr.null_space, names), prov,
    )
