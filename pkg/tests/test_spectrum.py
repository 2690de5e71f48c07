import warnings

import numpy as np
import pytest

from spinscope import spectrum as sp
from spinscope.errors import ValidationError
from spinscope.measurement import synthesize_trace
from spinscope.protocols import Protocol
from spinscope.register import TWO_PI, ElectronSpin, load_preset, make_register, register_frames
from spinscope.signals import RegimeWarning

T = np.arange(2000) * 0.2e-6


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield


def _trace(reg, tau, grid=T):
    return synthesize_trace(reg, Protocol("5p_eseem", "T", tau1=tau, tau2=tau), grid)


def test_constant_trace_is_flat():
    s = sp.fft_spectrum(T[:64], np.full(64, 0.7))
    assert np.max(s.amps) < 1e-14
    assert sp.find_peaks(s) == []


def test_unit_cosine_gives_unit_peak():
    t = np.arange(1000) * 1e-6
    s = sp.fft_spectrum(t, np.cos(TWO_PI * 50e3 * t))
    pk = sp.find_peaks(s, 0.5)
    assert len(pk) == 1
    assert pk[0].freq == pytest.approx(50e3, abs=5.0)
    assert pk[0].amp == pytest.approx(1.0, rel=1e-3)


@pytest.mark.parametrize("electron", [ElectronSpin.spin_half(), ElectronSpin.nv_like()], ids=["half", "nv"])
def test_single_spin_lines(electron):
    reg = make_register([(60e3, 12e3)], electron)
    f = register_frames(reg)[0]
    s = sp.fft_spectrum(_trace(reg, np.pi / reg.larmor_angular()[0]), window="hann")
    got = [p.freq for p in sp.find_peaks(s, 0.1)]
    want = sorted([f.omega_alpha / TWO_PI, f.omega_beta / TWO_PI])
    assert got == pytest.approx(want, abs=10.0)


def test_fft_input_checks():
    with pytest.raises(ValidationError):
        sp.fft_spectrum(T[:8], np.zeros(8))
    bad = T[:32].copy()
    bad[5] += 1e-8
    with pytest.raises(ValidationError):
        sp.fft_spectrum(bad, np.zeros(32))
    with pytest.raises(ValidationError):
        sp.fft_spectrum(T[:32], np.zeros(31))
    with pytest.raises(ValidationError):
        sp.fft_spectrum(T[:32], np.zeros(32), pad=0)


def test_resolution_scales_with_record_length():
    """Line width halves when the record doubles."""
    def width(n):
        t = np.arange(n) * 1e-6
        s = sp.fft_spectrum(t, np.cos(TWO_PI * 100e3 * t), pad=16)
        above = s.freqs[s.amps >= 0.5 * s.amps.max()]
        return above.max() - above.min()

    assert width(2000) == pytest.approx(width(1000) / 2, rel=0.1)


def test_find_peaks_threshold():
    t = np.arange(1000) * 1e-6
    s = sp.fft_spectrum(t, np.cos(TWO_PI * 50e3 * t) + 0.3 * np.cos(TWO_PI * 120e3 * t), window="hann")
    assert len(sp.find_peaks(s, 0.2)) == 2
    assert len(sp.find_peaks(s, 0.5)) == 1
    with pytest.raises(ValidationError):
        sp.find_peaks(s, 1.5)


def _spectra(reg, taus):
    return [sp.fft_spectrum(_trace(reg, tau, np.arange(1000) * 0.2e-6), window="hann") for tau in taus]


TAUS = np.arange(10e-6, 200e-6, 10e-6)


def test_correlation_map_structure():
    reg = load_preset("example_3spin_s_half")
    cmap = sp.tau_sweep_correlation(_spectra(reg, TAUS), TAUS, band=(300e3, 700e3))
    assert np.allclose(cmap.matrix, cmap.matrix.T)
    assert np.all(np.diag(cmap.matrix) == 1.0)
    assert np.all(np.abs(cmap.matrix) <= 1.0)
    assert cmap.freqs.min() >= 300e3 and cmap.freqs.max() <= 700e3


def test_zero_variance_bins_flagged():
    vary = [sp.Spectrum(np.arange(10.0), np.r_[np.full(5, float(k)), np.ones(5)]) for k in range(5)]
    cmap = sp.tau_sweep_correlation(vary, np.arange(5.0))
    assert cmap.zero_variance.tolist() == [False] * 5 + [True] * 5
    assert cmap.matrix[0, 7] == 0.0 and cmap.matrix[7, 7] == 1.0
    assert cmap.matrix[0, 1] == pytest.approx(1.0)


def test_spearman_and_input_checks():
    vary = [sp.Spectrum(np.arange(4.0), np.array([k, k**2, -k, 1.0])) for k in range(6)]
    cmap = sp.tau_sweep_correlation(vary, np.arange(6.0), method="spearman")
    assert cmap.matrix[0, 1] == pytest.approx(1.0)
    assert cmap.matrix[0, 2] == pytest.approx(-1.0)
    with pytest.raises(ValidationError):
        sp.tau_sweep_correlation(vary[:4], np.arange(4.0))
    with pytest.raises(ValidationError):
        sp.tau_sweep_correlation(vary, np.arange(6.0), method="kendall")


def _cmap(freqs, matrix):
    return sp.CorrelationMap(np.asarray(freqs, float), np.asarray(matrix, float), np.arange(5.0))


def test_pairing_greedy():
    m = [[1, 0.1, 0.9, 0.2], [0.1, 1, 0.3, 0.8], [0.9, 0.3, 1, 0.0], [0.2, 0.8, 0.0, 1]]
    res = sp.pair_frequencies(_cmap([1, 2, 3, 4], m), [1, 2, 3, 4])
    assert [(p.freq_a, p.freq_b) for p in res.pairs] == [(1, 3), (2, 4)]
    assert res.unpaired == []


def test_pairing_odd_count_leaves_one():
    m = np.eye(3)
    m[0, 1] = m[1, 0] = 0.5
    res = sp.pair_frequencies(_cmap([1, 2, 3], m), [sp.Peak(1, 1), sp.Peak(2, 1), sp.Peak(3, 1)])
    assert [(p.freq_a, p.freq_b) for p in res.pairs] == [(1, 2)]
    assert res.unpaired == [3]
    with pytest.raises(ValidationError):
        sp.pair_frequencies(_cmap([1], [[1]]), [1])


def test_pairing_recovers_single_nucleus():
    reg = make_register([(60e3, 12e3)], ElectronSpin.spin_half())
    spectra = _spectra(reg, TAUS)
    mean = sp.Spectrum(spectra[0].freqs, np.mean([s.amps for s in spectra], axis=0))
    peaks = sp.find_peaks(mean, 0.2)
    assert len(peaks) == 2
    cmap = sp.tau_sweep_correlation(spectra, TAUS, band=(400e3, 600e3))
    res = sp.pair_frequencies(cmap, peaks)
    assert len(res.pairs) == 1 and res.pairs[0].score > 0.9


def test_multiquantum_enumeration():
    # S=1/2 so no two lines coincide (for S=1 every alpha line sits at w_L)
    reg = make_register([(20e3, 10e3), (-30e3, 5e3)], ElectronSpin.spin_half())
    frames = register_frames(reg)
    lines = sp.multiquantum_lines(frames, 1)
    assert sum(line.order == 0 for line in lines) == 4
    assert sum(line.order == 1 for line in lines) == 12
    assert all(line.freq_hz > 0 for line in lines)
    a0, b1 = frames[0].omega_alpha / TWO_PI, frames[1].omega_beta / TWO_PI
    hit = [line for line in lines if line.composition in ("+a0-b1", "+b1-a0")]
    assert hit[0].freq_hz == pytest.approx(abs(a0 - b1))
    assert len(sp.multiquantum_lines(frames, 2)) == 4 + 12 + 4 * 4
    with pytest.raises(ValidationError):
        sp.multiquantum_lines(frames, 0)


def test_three_spin_combination_lines_present():
    reg = make_register([(150e3, 200e3), (-90e3, 180e3), (40e3, 150e3)], ElectronSpin.spin_half())
    frames = register_frames(reg)
    s = sp.fft_spectrum(_trace(reg, np.pi / frames[0].omega_alpha, np.arange(4000) * 0.1e-6), window="hann")
    triple = [line for line in sp.multiquantum_lines(frames, 2) if line.order == 2 and line.freq_hz < 2e6]
    floor = np.median(s.amps)
    assert max(s.amplitude_near(line.freq_hz) for line in triple) > 100 * floor


def test_blind_spot_suppresses_own_lines():
    reg = make_register([(150e3, 200e3), (-90e3, 180e3), (40e3, 150e3)], ElectronSpin.spin_half())
    from spinscope.signals import blind_bright_spots

    f0 = register_frames(reg)[0]
    spots = blind_bright_spots(f0, "alpha")
    grid = np.arange(4000) * 0.1e-6

    def amp(tau1):
        p = Protocol("5p_eseem", "T", tau1=tau1, tau2=spots.bright[0])
        s = sp.fft_spectrum(synthesize_trace(reg, p, grid), window="hann")
        return s.amplitude_near(f0.omega_alpha / TWO_PI)

    assert amp(spots.blind[1]) < 0.1 * amp(spots.bright[0])


def test_bispecies_lines_separate():
    reg = load_preset("bispecies")
    frames = register_frames(reg)
    s = sp.fft_spectrum(_trace(reg, 1.0e-6), window="hann")
    peaks = [p.freq for p in sp.find_peaks(s, 0.05)]
    si = [fr for fr, sp_ in zip(frames, reg.spins) if sp_.species != "13C"][0]
    assert any(abs(p - si.omega_alpha / TWO_PI) < 2e3 for p in peaks)
    assert any(abs(p - 500e3) < 2e3 for p in peaks)


def test_csv_exports(tmp_path):
    t = np.arange(64) * 1e-6
    s = sp.fft_spectrum(t, np.cos(TWO_PI * 1e5 * t))
    s.to_csv(tmp_path / "s.csv", {"seed": 1})
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0] == "# seed=1" and text[1] == "freq_hz,amp"
    assert len(text) == 2 + s.freqs.size
    cmap = _cmap([1, 2], np.eye(2))
    cmap.to_csv(tmp_path / "c.csv")
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 5
