"""Pure-NumPy kernels. Reference backend and fallback for the compiled one.

Every kernel takes per-spin parameter arrays of length ``n`` (angular units)
and time arrays of length ``m`` and returns the register signal of length
``m``. Work is done on ``(m, n)`` broadcasts, products/sums reduce over
spins.
"""
import numpy as np

#: Below this |cos(theta/2)| the decoupling filter switches to the Chebyshev form.
FILTER_SWITCH = 1e-6


def _cols(*arrays):
    return [np.asarray(a, dtype=float)[None, :] for a in arrays]


def _rows(*arrays):
    return [np.asarray(a, dtype=float)[:, None] for a in arrays]


def ramsey_product(w0, w1, dot, tau):
    w0, w1, dot = _cols(w0, w1, dot)
    (tau,) = _rows(tau)
    h0 = 0.5 * w0 * tau
    h1 = 0.5 * w1 * tau
    term = np.cos(h0) * np.cos(h1) + dot * np.sin(h0) * np.sin(h1)
    return np.prod(term, axis=1)


def echo_product(w0, w1, k_mod, tau):
    w0, w1, k_mod = _cols(w0, w1, k_mod)
    (tau,) = _rows(tau)
    s = np.sin(0.5 * w0 * tau) * np.sin(0.5 * w1 * tau)
    return np.prod(1.0 - 2.0 * k_mod * k_mod * s * s, axis=1)


def filter_ratio(theta, pulses_n):
    """``sin^2(N theta/2) / cos^2(theta/2)`` for even ``N`` with the removable singularity at pi."""
    theta = np.asarray(theta, dtype=float)
    half = 0.5 * theta
    c = np.cos(half)
    out = np.empty_like(theta)
    safe = np.abs(c) >= FILTER_SWITCH
    out[safe] = np.sin(pulses_n * half[safe]) ** 2 / c[safe] ** 2
    if not np.all(safe):
        # sin(2m x)/cos(x) = 2 sin(x) U_{m-1}(cos 2x)
        x = half[~safe]
        c2 = np.cos(2.0 * x)
        m = pulses_n // 2
        u_prev = np.zeros_like(c2)
        u = np.ones_like(c2)
        for _ in range(m - 1):
            u, u_prev = 2.0 * c2 * u - u_prev, u
        out[~safe] = (2.0 * np.sin(x) * u) ** 2
    return out


def dd_terms(w0, w1, dot, k_mod, tau, pulses_n, summation=False):
    """Decoupling signal; returns ``(signal, max_arccos_excess)``."""
    w0, w1, dot, k_mod = _cols(w0, w1, dot, k_mod)
    (tau,) = _rows(tau)
    a0 = w0 * tau
    a1 = w1 * tau
    arg = np.cos(a0) * np.cos(a1) - dot * np.sin(a0) * np.sin(a1)
    excess = float(np.max(np.abs(arg) - 1.0, initial=-1.0))
    theta = np.arccos(np.clip(arg, -1.0, 1.0))
    s = np.sin(0.5 * a0) * np.sin(0.5 * a1)
    mod = k_mod * k_mod * s * s * filter_ratio(theta, pulses_n)
    if summation:
        return 1.0 - 2.0 * np.sum(mod, axis=1), excess
    return np.prod(1.0 - 2.0 * mod, axis=1), excess


def _e2p(k, wa, wb, t):
    return (1.0 - 0.5 * k) + 0.5 * k * (
        np.cos(wa * t) + np.cos(wb * t) - 0.5 * np.cos((wa - wb) * t) - 0.5 * np.cos((wa + wb) * t)
    )


def _pathway_pair(k, eta, wa, wb, t1, t2, big_t, base, blind):
    """The ``+`` and ``-`` pathway factors for frequency ``wa`` (exchange args for beta)."""
    c_term = np.cos(0.5 * wa * t1) * np.cos(0.5 * wa * t2) * np.sin(0.5 * wb * t1) * np.sin(0.5 * wb * t2)
    phi_ap = 0.5 * wa * (t1 + t2)
    phi_bp = 0.5 * wb * (t1 + t2)
    phi_bm = 0.5 * wb * (t1 - t2)
    ce = np.cos(eta) ** 2
    se = np.sin(eta) ** 2
    inner = (
        -4.0 * k * k * c_term
        + 4.0 * k * ce * ce * np.cos(wa * big_t + phi_ap + phi_bp)
        + 2.0 * k * k * np.cos(phi_bm) * np.cos(wa * big_t + phi_ap)
        + 4.0 * k * se * se * np.cos(wa * big_t + phi_ap - phi_bp)
    )
    return base - blind * inner, base + blind * inner


def five_pulse(wa, wb, k, eta, t1, t2, big_t):
    """Five-pulse correlation signal, product over spins of the four pathways."""
    wa, wb, k, eta = _cols(wa, wb, k, eta)
    t1, t2, big_t = _rows(t1, t2, big_t)
    base = _e2p(k, wa, wb, t1) * _e2p(k, wa, wb, t2)
    blind = np.sin(0.5 * wa * t1) * np.sin(0.5 * wa * t2) * np.sin(0.5 * wb * t1) * np.sin(0.5 * wb * t2)
    ap, am = _pathway_pair(k, eta, wa, wb, t1, t2, big_t, base, blind)
    bp, bm = _pathway_pair(k, -eta, wb, wa, t1, t2, big_t, base, blind)
    return 0.25 * (np.prod(ap, axis=1) - np.prod(am, axis=1) + np.prod(bp, axis=1) - np.prod(bm, axis=1))
