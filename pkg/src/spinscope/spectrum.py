"""Frequency-domain analysis of correlation (ESEEM) traces.

FFT magnitude spectra, peak picking, the tau-sweep correlation map used to
assign pairs of lines to one nucleus, and the expected multi-quantum lines.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import signal as sps
from scipy import stats

from .errors import ValidationError
from .measurement import Trace
from .register import TWO_PI, DerivedSpinFrame

MIN_POINTS = 16
MIN_TAUS = 5
UNIFORM_RTOL = 1e-6
PEAK_FLOOR = 1e-12  # amplitudes below this are rounding noise


def _comment(fh, header):
    for key, value in (header or {}).items():
        fh.write(f"# {key}={value}\n")


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    amps: np.ndarray
    source: str = ""
    window: str = "none"

    def amplitude_near(self, freq, bins=2):
        """Largest amplitude within ``bins`` bins of ``freq``."""
        i = int(np.argmin(np.abs(self.freqs - freq)))
        return float(self.amps[max(0, i - bins): i + bins + 1].max())

    def to_csv(self, path, header=None):
        with open(path, "w", newline="") as fh:
            _comment(fh, header)
            w = csv.writer(fh)
            w.writerow(["freq_hz", "amp"])
            w.writerows(zip(self.freqs.tolist(), self.amps.tolist()))


def _digest(t, y):
    h = hashlib.sha256(np.ascontiguousarray(t, dtype=float).tobytes())
    h.update(np.ascontiguousarray(y, dtype=float).tobytes())
    return h.hexdigest()[:16]


def fft_spectrum(trace, values=None, window: str = "none", pad: int = 4) -> Spectrum:
    """Magnitude spectrum of a uniformly sampled trace.

    ``trace`` is a :class:`Trace` or a time array (then ``values`` holds the
    samples). The mean is removed, the optional ``window`` (any
    :func:`scipy.signal.get_window` name) applied and the record zero-padded
    ``pad`` times. Amplitudes are scaled by ``2/len(record)`` so a unit
    cosine gives a unit peak.
    """
    if isinstance(trace, Trace):
        t, y = trace.as_arrays()
    else:
        t, y = np.asarray(trace, dtype=float), np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValidationError("time and value arrays must be 1-D and equal length", "values")
    if t.size < MIN_POINTS:
        raise ValidationError(f"need at least {MIN_POINTS} samples", "values")
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > UNIFORM_RTOL * abs(dt.mean()):
        raise ValidationError("FFT needs a uniform, increasing sweep grid", "sweep_values")
    if int(pad) != pad or pad < 1:
        raise ValidationError("pad must be an integer >= 1", "pad")
    x = y - y.mean()
    if window != "none":
        x = x * sps.get_window(window, x.size)
    n = int(pad) * x.size
    amps = np.abs(np.fft.rfft(x, n)) * 2.0 / x.size
    return Spectrum(np.fft.rfftfreq(n, dt.mean()), amps, _digest(t, y), window)


class Peak(NamedTuple):
    freq: float
    amp: float


def find_peaks(spectrum: Spectrum, threshold_rel: float = 0.1) -> list[Peak]:
    """Local maxima above ``threshold_rel * max``, refined by a 3-point parabola."""
    if not 0 < threshold_rel < 1:
        raise ValidationError("threshold_rel must be in (0, 1)", "threshold_rel")
    a = spectrum.amps
    top = a.max(initial=0.0)
    if top <= PEAK_FLOOR:
        return []
    idx, _ = sps.find_peaks(a, height=threshold_rel * top)
    df = spectrum.freqs[1] - spectrum.freqs[0]
    out = []
    for i in idx:
        y0, y1, y2 = a[i - 1], a[i], a[i + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        out.append(Peak(float(spectrum.freqs[i] + shift * df), float(y1 - 0.25 * (y0 - y2) * shift)))
    return sorted(out)


@dataclass
class CorrelationMap:
    """Correlation of amplitude-versus-tau profiles between frequency bins."""

    freqs: np.ndarray
    matrix: np.ndarray
    tau_values: np.ndarray
    zero_variance: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    method: str = "pearson"

    def index(self, freq):
        return int(np.argmin(np.abs(self.freqs - freq)))

    def score(self, f_a, f_b):
        return float(self.matrix[self.index(f_a), self.index(f_b)])

    def to_csv(self, path, header=None):
        with open(path, "w", newline="") as fh:
            _comment(fh, header)
            w = csv.writer(fh)
            w.writerow(["freq_i_hz", "freq_j_hz", "corr"])
            for i, j in itertools.product(range(self.freqs.size), repeat=2):
                w.writerow([self.freqs[i], self.freqs[j], self.matrix[i, j]])


def tau_sweep_correlation(spectra, tau_values, band=None, method: str = "pearson") -> CorrelationMap:
    """Correlate every pair of frequency bins across the tau sweep.

    ``spectra`` share one frequency axis. ``band=(f_lo, f_hi)`` restricts the
    bins. Bins whose amplitude does not vary get correlation 0 (diagonal 1)
    and are flagged in ``zero_variance``.
    """
    if method not in ("pearson", "spearman"):
        raise ValidationError("method must be 'pearson' or 'spearman'", "method")
    spectra = list(spectra)
    tau_values = np.asarray(tau_values, dtype=float)
    if len(spectra) < MIN_TAUS or len(spectra) != tau_values.size:
        raise ValidationError(f"need one spectrum per tau and at least {MIN_TAUS} tau values", "tau_values")
    freqs = spectra[0].freqs
    if any(s.freqs.shape != freqs.shape or not np.allclose(s.freqs, freqs) for s in spectra):
        raise ValidationError("spectra do not share a frequency axis", "freqs")
    keep = np.ones(freqs.size, dtype=bool) if band is None else (freqs >= band[0]) & (freqs <= band[1])
    prof = np.stack([s.amps[keep] for s in spectra])  # (tau, bins)
    if method == "spearman":
        prof = stats.rankdata(prof, axis=0)
    prof = prof - prof.mean(axis=0)
    norm = np.sqrt((prof**2).sum(axis=0))
    flat = norm <= 1e-12 * max(norm.max(initial=0.0), 1e-300)
    z = np.where(flat, 0.0, prof / np.where(flat, 1.0, norm))
    m = np.clip(z.T @ z, -1.0, 1.0)
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 1.0)
    return CorrelationMap(freqs[keep], m, tau_values, flat, method)


class Pair(NamedTuple):
    freq_a: float
    freq_b: float
    score: float


class Pairing(NamedTuple):
    pairs: list
    unpaired: list


def pair_frequencies(cmap: CorrelationMap, peaks) -> Pairing:
    """Greedy matching of peaks by descending correlation score.

    Each peak is used once; ties go to the pair with the lower frequencies.
    Leftover peaks are returned in ``unpaired``.
    """
    freqs = sorted(float(p.freq if isinstance(p, Peak) else p) for p in peaks)
    if len(freqs) < 2:
        raise ValidationError("need at least two peaks to pair", "peaks")
    cand = [(-cmap.score(a, b), a, b) for a, b in itertools.combinations(freqs, 2)]
    used, pairs = set(), []
    for neg, a, b in sorted(cand):
        if a in used or b in used:
            continue
        used.update((a, b))
        pairs.append(Pair(a, b, -neg))
    return Pairing(pairs, [f for f in freqs if f not in used])


class Line(NamedTuple):
    freq_hz: float
    composition: str
    order: int


def multiquantum_lines(frames: list[DerivedSpinFrame], max_order: int = 1) -> list[Line]:
    """Single-quantum lines and signed sums of up to ``max_order + 1`` distinct ones.

    Lines are labelled ``a<j>``/``b<j>`` (alpha/beta of spin ``j``); the
    composition string reads e.g. ``+a0-b1``. Frequencies are folded positive
    and zero-frequency combinations dropped.
    """
    if int(max_order) != max_order or max_order < 1:
        raise ValidationError("max_order must be an integer >= 1", "max_order")
    base = []
    for j, f in enumerate(frames):
        base.append((f"a{j}", f.omega_alpha / TWO_PI))
        base.append((f"b{j}", f.omega_beta / TWO_PI))
    out = [Line(f, name, 0) for name, f in base]
    for m in range(2, max_order + 2):
        for combo in itertools.combinations(base, m):
            for signs in itertools.product((1, -1), repeat=m - 1):
                signs = (1, *signs)
                freq = sum(s * f for s, (_, f) in zip(signs, combo))
                if abs(freq) < 1e-9:
                    continue
                if freq < 0:
                    signs = tuple(-s for s in signs)
                comp = "".join(("+" if s > 0 else "-") + name for s, (name, _) in zip(signs, combo))
                out.append(Line(abs(freq), comp, m - 1))
    return sorted(out)
