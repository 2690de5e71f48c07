"""Closed-form sequence signals: Ramsey, Hahn echo, dynamical decoupling and
five-pulse correlation ESEEM, plus their approximations.

All public signal functions accept a scalar or an array of times and return
a value of the same shape. Decay envelopes are multiplicative and only
applied when ``SignalOptions.include_decay`` is set.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError, ValidationError
from .register import TWO_PI, DerivedSpinFrame, ElectronSpin, Register, frame_arrays

#: Largest |cos(theta)| excess over 1 that is silently clamped.
ARCCOS_TOLERANCE = 1e-9


class RegimeWarning(UserWarning):
    """An approximation is used outside the regime where it is accurate."""


@dataclass(frozen=True)
class SignalOptions:
    include_decay: bool = False
    pulses_n: int = 2
    order_p: int = 0

    def __post_init__(self):
        if int(self.pulses_n) != self.pulses_n or self.pulses_n < 1:
            raise ValidationError("pulses_n must be a positive integer", "pulses_n")
        if int(self.order_p) != self.order_p or self.order_p < 0:
            raise ValidationError("order_p must be a non-negative integer", "order_p")


@dataclass(frozen=True)
class EseemTiming:
    """Echo delays ``tau1``/``tau2`` and free evolution ``t_free`` (s). Fields may be arrays."""

    tau1: float
    tau2: float
    t_free: float

    def __post_init__(self):
        for name in ("tau1", "tau2", "t_free"):
            if np.any(np.asarray(getattr(self, name), dtype=float) < 0):
                raise ValidationError(f"{name} must be >= 0", name)

    def broadcast(self):
        return np.broadcast_arrays(
            np.atleast_1d(np.asarray(self.tau1, dtype=float)),
            np.atleast_1d(np.asarray(self.tau2, dtype=float)),
            np.atleast_1d(np.asarray(self.t_free, dtype=float)),
        )

    @property
    def shape(self):
        return np.broadcast(
            np.asarray(self.tau1), np.asarray(self.tau2), np.asarray(self.t_free)
        ).shape


class SpinParams(NamedTuple):
    """Per-spin frame arrays (rad/s) consumed by the kernels."""

    omega_0: np.ndarray
    omega_1: np.ndarray
    axes_dot: np.ndarray
    k_mod: np.ndarray
    k_depth: np.ndarray
    eta: np.ndarray


_DEFAULT = SignalOptions()


def spin_params_from(a_zz_hz, a_zx_hz, omega_l, electron: ElectronSpin) -> SpinParams:
    f = frame_arrays(a_zz_hz, a_zx_hz, omega_l, electron.s0, electron.s1)
    return SpinParams(f["omega_0"], f["omega_1"], f["axes_dot"], f["k_mod"], f["k_depth"], f["eta"])


@lru_cache(maxsize=256)
def spin_params(register: Register) -> SpinParams:
    a_zz, a_zx, _ = register.coupling_arrays()
    return spin_params_from(a_zz, a_zx, register.larmor_angular(), register.electron)


def _as_grid(t):
    arr = np.asarray(t, dtype=float)
    return arr, np.atleast_1d(arr).ravel()


def _shape_like(values, template):
    return float(values[0]) if template.ndim == 0 else values.reshape(template.shape)


def _nonneg(arr, name):
    if np.any(arr < 0):
        raise ValidationError(f"{name} must be >= 0", name)


def _check_even(pulses_n):
    if pulses_n < 2 or pulses_n % 2:
        raise ValidationError(
            f"closed-form decoupling needs an even pulse count >= 2, got {pulses_n}", "pulses_n"
        )


# --- evaluators on raw parameter arrays --------------------------------------
# These are shared with the estimation module, which perturbs couplings
# without building validated Register objects.


def ramsey_values(p: SpinParams, electron: ElectronSpin, env, tau, include_decay=False):
    tau = np.asarray(tau, dtype=float)
    out = _kernels.ramsey_product(p.omega_0, p.omega_1, p.axes_dot, tau)
    out = out * np.cos(TWO_PI * electron.detuning * (electron.s1 - electron.s0) * tau)
    if include_decay:
        out = out * np.exp(-((tau / env.t2_star) ** env.stretch_m))
    return out


def hahn_values(p: SpinParams, env, tau, include_decay=False):
    tau = np.asarray(tau, dtype=float)
    out = _kernels.echo_product(p.omega_0, p.omega_1, p.k_mod, tau)
    if include_decay:
        out = out * np.exp(-2.0 * tau / env.t2)
    return out


def dd_values(p: SpinParams, env, tau, pulses_n, include_decay=False, summation=False):
    _check_even(pulses_n)
    tau = np.asarray(tau, dtype=float)
    out, excess = _kernels.dd_terms(
        p.omega_0, p.omega_1, p.axes_dot, p.k_mod, tau, int(pulses_n), bool(summation)
    )
    if excess > ARCCOS_TOLERANCE:
        raise DomainError(f"effective-angle cosine exceeds 1 by {excess:.3e}")
    if include_decay:
        out = out * np.exp(-2.0 * pulses_n * tau / env.t2_for_pulses(pulses_n))
    return out


def five_pulse_values(p: SpinParams, env, tau1, tau2, t_free, include_decay=False):
    tau1, tau2, t_free = np.broadcast_arrays(
        np.asarray(tau1, dtype=float), np.asarray(tau2, dtype=float), np.asarray(t_free, dtype=float)
    )
    out = _kernels.five_pulse(p.omega_0, p.omega_1, p.k_depth, p.eta, tau1, tau2, t_free)
    if include_decay:
        out = out * np.exp(-(2.0 * tau1 + 2.0 * tau2) / env.t2 - t_free / env.t1)
    return out


# --- public signals ---------------------------------------------------------


def ramsey(register: Register, tau, opts: SignalOptions = _DEFAULT):
    """Free-induction (Ramsey) signal.

    The detuning beat is ``cos(2*pi*detuning*(s1 - s0)*tau)``; for both
    electron presets ``|s1 - s0| = 1``.
    """
    tau_in, tau = _as_grid(tau)
    _nonneg(tau, "tau")
    out = ramsey_values(spin_params(register), register.electron, register.environment, tau, opts.include_decay)
    return _shape_like(out, tau_in)


def hahn_echo(register: Register, tau, opts: SignalOptions = _DEFAULT):
    """Hahn-echo signal for free-evolution halves of length ``tau``."""
    tau_in, tau = _as_grid(tau)
    _nonneg(tau, "tau")
    out = hahn_values(spin_params(register), register.environment, tau, opts.include_decay)
    return _shape_like(out, tau_in)


def dd_effective_angle(frame: DerivedSpinFrame, tau):
    """Rotation angle ``theta`` in [0, pi] of one decoupling unit cell."""
    tau_in, tau = _as_grid(tau)
    a0 = frame.omega_0 * tau
    a1 = frame.omega_1 * tau
    arg = np.cos(a0) * np.cos(a1) - frame.axes_dot * np.sin(a0) * np.sin(a1)
    excess = np.max(np.abs(arg)) - 1.0
    if excess > ARCCOS_TOLERANCE:
        raise DomainError(f"effective-angle cosine exceeds 1 by {excess:.3e}")
    return _shape_like(np.arccos(np.clip(arg, -1.0, 1.0)), tau_in)


def dd(register: Register, tau, opts: SignalOptions = SignalOptions(pulses_n=2)):
    """CPMG-type decoupling signal with ``opts.pulses_n`` (even) pi pulses.

    ``tau`` is the outer free-evolution delay; pulses are separated by ``2*tau``.
    """
    _check_even(opts.pulses_n)
    tau_in, tau = _as_grid(tau)
    _nonneg(tau, "tau")
    out = dd_values(spin_params(register), register.environment, tau, opts.pulses_n, opts.include_decay)
    return _shape_like(out, tau_in)


def dd_summation(register: Register, tau, opts: SignalOptions = SignalOptions(pulses_n=2)):
    """Decoupling signal with the product over spins replaced by a sum."""
    _check_even(opts.pulses_n)
    tau_in, tau = _as_grid(tau)
    _nonneg(tau, "tau")
    out = dd_values(
        spin_params(register), register.environment, tau, opts.pulses_n, opts.include_decay, summation=True
    )
    return _shape_like(out, tau_in)


class ResonanceTime(NamedTuple):
    exact: float
    expanded: float


def resonance_times(frame: DerivedSpinFrame, electron: ElectronSpin, order_p) -> ResonanceTime:
    """Decoupling resonance ``(2p+1)*pi/(omega_0 + omega_1)`` and its high-field expansion."""
    order_p = np.asarray(order_p)
    odd = (2 * order_p + 1) * math.pi
    exact = odd / (frame.omega_0 + frame.omega_1)
    wl = frame.omega_l
    s0, s1 = electron.s0, electron.s1
    expanded = odd / (
        2.0 * wl * (1.0 + 0.5 * (s0 + s1) * frame.a_zz / wl + 0.25 * (s0**2 + s1**2) * frame.a_zx**2 / wl**2)
    )
    if order_p.ndim == 0:
        return ResonanceTime(float(exact), float(expanded))
    return ResonanceTime(exact, expanded)


def lorentzian_width(frame: DerivedSpinFrame, electron: ElectronSpin) -> float:
    """Half width ``(s1 - s0) * A_zx / (2 omega_L^2)`` of a decoupling dip, in s."""
    return abs((electron.s1 - electron.s0) * frame.a_zx / (2.0 * frame.omega_l**2))


def dd_lorentzian(frame: DerivedSpinFrame, electron: ElectronSpin, pulses_n, delta_tau):
    """Lorentzian approximation of one decoupling dip at offset ``delta_tau`` from resonance."""
    if max(abs(frame.a_zz), abs(frame.a_zx)) > 0.1 * frame.omega_l:
        warnings.warn("Lorentzian dip model assumes omega_L >> A_zz, A_zx", RegimeWarning, stacklevel=2)
    ds = electron.s1 - electron.s0
    depth = 2.0 * math.sin(0.5 * pulses_n * ds * frame.a_zx / frame.omega_l) ** 2
    w = ds * frame.a_zx / (2.0 * frame.omega_l**2)
    delta_tau = np.asarray(delta_tau, dtype=float)
    if w == 0:
        out = np.ones_like(delta_tau)
    else:
        out = 1.0 - depth * w * w / (delta_tau**2 + w * w)
    return float(out) if out.ndim == 0 else out


def two_pulse_envelope(frame: DerivedSpinFrame, t):
    """Two-pulse ESEEM envelope ``E_2p(t)`` of one nucleus (``t`` = inter-pulse delay)."""
    t = np.asarray(t, dtype=float)
    k, wa, wb = frame.k_depth, frame.omega_0, frame.omega_1
    out = (1.0 - 0.5 * k) + 0.5 * k * (
        np.cos(wa * t) + np.cos(wb * t) - 0.5 * np.cos((wa - wb) * t) - 0.5 * np.cos((wa + wb) * t)
    )
    return float(out) if out.ndim == 0 else out


def _warn_short_free(register, t_free):
    if np.any(np.asarray(t_free) < register.environment.t2_star):
        warnings.warn(
            "free evolution shorter than T2*; the correlation formula assumes the electron coherence has decayed",
            RegimeWarning,
            stacklevel=3,
        )


def five_pulse_eseem(register: Register, timing: EseemTiming, opts: SignalOptions = _DEFAULT):
    """Five-pulse correlation ESEEM: four electron pathways, each a product over nuclei."""
    _warn_short_free(register, timing.t_free)
    shape = timing.shape
    t1, t2, tf = timing.broadcast()
    out = five_pulse_values(spin_params(register), register.environment, t1.ravel(), t2.ravel(), tf.ravel(),
                            opts.include_decay)
    return float(out[0]) if shape == () else out.reshape(shape)


def eseem_summation(register: Register, timing: EseemTiming, which: str = "alpha"):
    """Low-depth sum approximation of the ``alpha`` (or ``beta``) pathway difference."""
    p = spin_params(register)
    if np.any(p.k_depth > 0.1):
        warnings.warn("summation rule assumes small modulation depth", RegimeWarning, stacklevel=2)
    shape = timing.shape
    t1, t2, tf = (a.ravel()[:, None] for a in timing.broadcast())
    if which not in ("alpha", "beta"):
        raise ValidationError("which must be 'alpha' or 'beta'", "which")
    wa, wb = (p.omega_0, p.omega_1) if which == "alpha" else (p.omega_1, p.omega_0)
    blind = np.sin(0.5 * wa * t1) * np.sin(0.5 * wa * t2) * np.sin(0.5 * wb * t1) * np.sin(0.5 * wb * t2)
    phase = wa * tf + 0.5 * (wa + wb) * (t1 + t2)
    out = np.sum(-8.0 * blind * p.k_depth * np.cos(p.eta) ** 4 * np.cos(phase), axis=1)
    return float(out[0]) if shape == () else out.reshape(shape)


def eseem_pathway_difference(register: Register, timing: EseemTiming, which: str = "alpha"):
    """Exact ``prod E_{+} - prod E_{-}`` for one frequency family (no decay)."""
    p = spin_params(register)
    if which == "beta":
        p = p._replace(omega_0=p.omega_1, omega_1=p.omega_0, eta=-p.eta)
    elif which != "alpha":
        raise ValidationError("which must be 'alpha' or 'beta'", "which")
    shape = timing.shape
    t1, t2, tf = (a.ravel()[:, None] for a in timing.broadcast())
    k, wa, wb, eta = p.k_depth, p.omega_0, p.omega_1, p.eta

    def e2p(t):
        return (1 - 0.5 * k) + 0.5 * k * (np.cos(wa * t) + np.cos(wb * t)
                                          - 0.5 * np.cos((wa - wb) * t) - 0.5 * np.cos((wa + wb) * t))

    base = e2p(t1) * e2p(t2)
    blind = np.sin(0.5 * wa * t1) * np.sin(0.5 * wa * t2) * np.sin(0.5 * wb * t1) * np.sin(0.5 * wb * t2)
    c_term = np.cos(0.5 * wa * t1) * np.cos(0.5 * wa * t2) * np.sin(0.5 * wb * t1) * np.sin(0.5 * wb * t2)
    pap, pbp, pbm = 0.5 * wa * (t1 + t2), 0.5 * wb * (t1 + t2), 0.5 * wb * (t1 - t2)
    inner = (-4 * k * k * c_term + 4 * k * np.cos(eta) ** 4 * np.cos(wa * tf + pap + pbp)
             + 2 * k * k * np.cos(pbm) * np.cos(wa * tf + pap)
             + 4 * k * np.sin(eta) ** 4 * np.cos(wa * tf + pap - pbp))
    out = np.prod(base - blind * inner, axis=1) - np.prod(base + blind * inner, axis=1)
    return float(out[0]) if shape == () else out.reshape(shape)


class SpotLists(NamedTuple):
    blind: list
    bright: list


def blind_bright_spots(frame: DerivedSpinFrame, which_freq: str = "alpha", max_order: int = 3) -> SpotLists:
    """Echo delays that suppress (``2m*pi/omega``) or maximise (``(2m+1)*pi/omega``) a line."""
    if which_freq not in ("alpha", "beta"):
        raise ValidationError("which_freq must be 'alpha' or 'beta'", "which_freq")
    omega = frame.omega_0 if which_freq == "alpha" else frame.omega_1
    if omega <= 0:
        raise ValidationError("frequency must be positive", "omega")
    step = math.pi / omega
    return SpotLists(
        [2 * m * step for m in range(max_order + 1)],
        [(2 * m + 1) * step for m in range(max_order + 1)],
    )


@dataclass(frozen=True)
class Bath:
    """A homogeneous nuclear bath: modulation amplitude and Larmor frequency (Hz)."""

    k: float
    larmor_hz: float


def bispecies_dd(bath1: Bath, bath2: Bath, tau):
    """Two interfering baths in the high-field decoupling limit."""
    tau = np.asarray(tau, dtype=float)
    w1 = TWO_PI * bath1.larmor_hz
    w2 = TWO_PI * bath2.larmor_hz
    out = 1.0 - 2.0 * bath1.k**2 * np.sin(0.5 * w1 * tau) ** 4 - 2.0 * bath2.k**2 * np.sin(0.5 * w2 * tau) ** 4
    return float(out) if out.ndim == 0 else out


def dd_eseem(register: Register, timing: EseemTiming, pulses_per_block: int, opts: SignalOptions = _DEFAULT):
    """Correlation sequence with a CPMG block in each entangling period.

    No closed form exists; every point is simulated by :mod:`spinscope.oracle`.
    ``pulses_per_block`` must be even, or 1 (plain five-pulse layout).
    """
    from . import oracle

    n = int(pulses_per_block)
    if n != pulses_per_block or n < 1 or (n > 1 and n % 2):
        raise ValidationError("pulses_per_block must be 1 or an even integer", "pulses_per_block")
    if len(register) > oracle.MAX_SPINS:
        raise oracle.SizeError(f"register has {len(register)} spins; the oracle handles at most {oracle.MAX_SPINS}")
    _warn_short_free(register, timing.t_free)
    shape = timing.shape
    t1, t2, tf = (a.ravel() for a in timing.broadcast())
    out = np.array([
        oracle.simulate(register, oracle.make_descriptor("dd_eseem", tau1=a, tau2=b, t_free=c, pulses_n=n))
        for a, b, c in zip(t1, t2, tf)
    ])
    if opts.include_decay:
        env = register.environment
        out = out * np.exp(-2.0 * n * (t1 + t2) / env.t2_for_pulses(n) - tf / env.t1)
    return float(out[0]) if shape == () else out.reshape(shape)


def dd_exact(register: Register, tau, pulses_n: int):
    """Decoupling signal for any pulse count ``>= 1``, simulated by :mod:`spinscope.oracle`.

    The closed form covers even counts only; odd counts are routed here.
    """
    from . import oracle

    n = int(pulses_n)
    if n != pulses_n or n < 1:
        raise ValidationError("pulses_n must be a positive integer", "pulses_n")
    tau_in, tau = _as_grid(tau)
    _nonneg(tau, "tau")
    out = np.array([oracle.simulate(register, oracle.make_descriptor("dd", tau=t, pulses_n=n)) for t in tau])
    return _shape_like(out, tau_in)
