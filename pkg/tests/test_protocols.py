import numpy as np
import pytest

from spinscope import signals
from spinscope.errors import ValidationError
from spinscope.protocols import Protocol
from spinscope.register import make_register


@pytest.mark.parametrize("kwargs", [
    {"name": "nope"},
    {"name": "dd", "pulses_n": 3},
    {"name": "hahn", "sweep": "T"},
    {"name": "dd", "sweep": "N"},
    {"name": "5p_eseem", "sweep": "T"},
    {"name": "5p_eseem", "sweep": "tau"},
    {"name": "dd_eseem", "pulses_n": 3, "tau1": 1e-6, "tau2": 1e-6},
])
def test_invalid_protocols(kwargs):
    with pytest.raises(ValidationError):
        Protocol(**kwargs)


def test_grid_checks():
    p = Protocol("hahn")
    for bad in ([], [2e-6, 1e-6], [-1e-6, 0.0], [[1e-6]]):
        with pytest.raises(ValidationError):
            p.check_grid(bad)
    with pytest.raises(ValidationError):
        Protocol("dd", "N", tau=1e-6).check_grid([2, 3])


def test_n_sweep_matches_individual_calls(one_spin):
    p = Protocol("dd", "N", tau=0.5e-6)
    got = p.evaluate(one_spin, [2, 4, 8])
    want = [signals.dd(one_spin, 0.5e-6, signals.SignalOptions(pulses_n=n)) for n in (2, 4, 8)]
    assert got == pytest.approx(want, abs=1e-15)


def test_coupling_override_even_in_azx(one_spin):
    p = Protocol("dd", pulses_n=8)
    grid = np.linspace(0.1e-6, 2e-6, 50)
    pos = p.evaluate(one_spin, grid, (np.array([20e3]), np.array([10e3])))
    neg = p.evaluate(one_spin, grid, (np.array([20e3]), np.array([-10e3])))
    assert pos == pytest.approx(neg, abs=1e-14)
    assert pos == pytest.approx(p.evaluate(one_spin, grid), abs=0)


def test_tau_sweep_of_correlation_sequence(one_spin):
    p = Protocol("5p_eseem", "tau", t_free=20e-6)
    grid = np.linspace(0.1e-6, 2e-6, 7)
    want = signals.five_pulse_eseem(one_spin, signals.EseemTiming(grid, grid, 20e-6))
    assert p.evaluate(one_spin, grid) == pytest.approx(want)


def test_dd_eseem_override_uses_magnitude():
    reg = make_register([(20e3, 10e3)])
    p = Protocol("dd_eseem", "T", pulses_n=2, tau1=0.5e-6, tau2=0.5e-6)
    grid = np.linspace(6e-6, 8e-6, 4)
    assert p.evaluate(reg, grid, ([20e3], [-10e3])) == pytest.approx(p.evaluate(reg, grid), abs=1e-15)


def test_round_trip_dict():
    p = Protocol("5p-ESEEM", "T", tau1=1e-6, tau2=2e-6, include_decay=True)
    assert p.name == "5p_eseem"
    assert Protocol.from_dict(p.to_dict()) == p
