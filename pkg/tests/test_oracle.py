import math

import numpy as np
import pytest

from spinscope import oracle, signals
from spinscope.errors import SizeError, ValidationError
from spinscope.oracle import Delay, Pulse, SequenceDescriptor, build_hamiltonians, make_descriptor, simulate
from spinscope.register import ElectronSpin, make_register, register_frames

NV2 = make_register([(20e3, 10e3), (-35e3, 6e3)])
HALF2 = make_register([(-60e3, 12e3), (25e3, 8e3)], ElectronSpin.spin_half())

# Reference values computed once by the density-matrix simulator and frozen.
FROZEN = [
    (NV2, "hahn", {"tau": 1.3e-6}, 0.9992774563682135),
    (NV2, "dd", {"tau": 0.51e-6, "pulses_n": 8}, 0.9822055444379335),
    (NV2, "5p_eseem", {"tau1": 0.7e-6, "tau2": 1.1e-6, "t_free": 3.3e-6}, 0.001529820549738603),
    (NV2, "ramsey", {"tau": 2.2e-6}, 0.9616423573950634),
    (HALF2, "hahn", {"tau": 1.3e-6}, 0.9989756810093633),
    (HALF2, "dd", {"tau": 0.51e-6, "pulses_n": 8}, 0.9725331010865379),
    (HALF2, "5p_eseem", {"tau1": 0.7e-6, "tau2": 1.1e-6, "t_free": 3.3e-6}, 0.0020899757549657227),
    (HALF2, "ramsey", {"tau": 2.2e-6}, 0.9015998235886464),
]


@pytest.mark.parametrize("reg,proto,params,expected", FROZEN)
def test_frozen_reference_values(reg, proto, params, expected):
    assert simulate(reg, make_descriptor(proto, **params)) == pytest.approx(expected, abs=1e-12)


def test_ramsey_layout():
    d = make_descriptor("ramsey", tau=1e-6)
    assert d.elements == (Pulse(math.pi / 2), Delay(1e-6), Pulse(-math.pi / 2))


def test_dd2_layout():
    d = make_descriptor("dd", tau=1e-6, pulses_n=2)
    assert d.elements == (Pulse(math.pi / 2), Delay(1e-6), Pulse(math.pi), Delay(2e-6), Pulse(math.pi),
                          Delay(1e-6), Pulse(-math.pi / 2))
    assert d.duration == pytest.approx(4e-6)
    assert d.pulse_count() == 4


def test_five_pulse_layout():
    d = make_descriptor("5p_eseem", tau1=1e-6, tau2=2e-6, t_free=5e-6)
    axes = [el.axis for el in d.elements if isinstance(el, Pulse)]
    assert axes == ["x", "x", "y", "y", "x", "x"]
    assert [el.dephase for el in d.elements if isinstance(el, Delay)] == [False, False, True, False, False]


def test_incomplete_params():
    with pytest.raises(ValidationError):
        make_descriptor("dd", tau=1e-6)
    with pytest.raises(ValidationError):
        make_descriptor("nope", tau=1e-6)


def test_descriptor_validation():
    with pytest.raises(ValidationError):
        Pulse(7.0)
    with pytest.raises(ValidationError):
        Pulse(1.0, axis="z")
    with pytest.raises(ValidationError):
        Delay(-1.0)
    with pytest.raises(ValidationError):
        SequenceDescriptor(())


def test_empty_register_hamiltonian():
    reg = make_register([], ElectronSpin(0, -1, detuning=3e3))
    pair = build_hamiltonians(reg)
    assert pair.dim == 1 and pair.h0[0, 0] == 0
    assert pair.electron_phases == pytest.approx((0.0, -2 * math.pi * 3e3))


def test_bare_zeeman_eigenvalues():
    reg = make_register([(20e3, 10e3)])
    f = register_frames(reg)[0]
    pair = build_hamiltonians(reg)
    assert np.linalg.eigvalsh(pair.h0) == pytest.approx([-f.omega_l / 2, f.omega_l / 2], rel=1e-12)
    assert np.allclose(pair.h1, pair.h1.conj().T, atol=1e-12)


def test_size_guard():
    reg = make_register([(1e3 * i, 1e3) for i in range(oracle.MAX_SPINS + 1)])
    with pytest.raises(SizeError):
        build_hamiltonians(reg)


def test_propagators_unitary():
    reg = make_register([(20e3, 10e3), (-35e3, 6e3), (5e3, 2e3)])
    for branch in (0, 1):
        u = oracle.propagator(reg, branch, 3.7e-6)
        assert np.linalg.norm(u.conj().T @ u - np.eye(8)) <= 1e-10


def test_bare_ramsey_is_one():
    reg = make_register([])
    for tau in (0.0, 1e-6, 7.3e-6):
        assert simulate(reg, make_descriptor("ramsey", tau=tau)) == pytest.approx(1.0, abs=1e-12)


def test_permutation_invariance():
    a = make_register([(20e3, 10e3), (-35e3, 6e3), (5e3, 2e3)])
    b = make_register([(5e3, 2e3), (20e3, 10e3), (-35e3, 6e3)])
    for proto, params in [("dd", {"tau": 0.5e-6, "pulses_n": 4}), ("5p_eseem", {"tau1": 1e-6, "tau2": 0.8e-6, "t_free": 2e-6})]:
        d = make_descriptor(proto, **params)
        assert simulate(a, d) == pytest.approx(simulate(b, d), abs=1e-12)


@pytest.mark.parametrize("proto,params", [("ramsey", {"tau": 1.7e-6}), ("hahn", {"tau": 1.7e-6}),
                                          ("dd", {"tau": 0.52e-6, "pulses_n": 6})])
def test_factorization_one_plus_one(proto, params):
    a, b = (20e3, 10e3), (-35e3, 6e3)
    d = make_descriptor(proto, **params)
    both = simulate(make_register([a, b]), d)
    assert both == pytest.approx(simulate(make_register([a]), d) * simulate(make_register([b]), d), abs=1e-12)


def test_output_range(rng):
    reg = make_register([(rng.uniform(-1e5, 1e5), rng.uniform(0, 1e5)) for _ in range(3)])
    for tau in rng.uniform(0, 5e-6, 20):
        for d in (make_descriptor("dd", tau=tau, pulses_n=3), make_descriptor("hahn", tau=tau)):
            assert abs(simulate(reg, d)) <= 1 + 1e-12


def test_five_pulse_has_four_pathways():
    d = make_descriptor("5p_eseem", tau1=0.9e-6, tau2=1.3e-6, t_free=4e-6)
    parts = oracle.pathway_contributions(NV2, d)
    nonzero = {k for k, v in parts.items() if abs(v) > 1e-12}
    assert len(nonzero) == 4
    assert {k[0] for k in nonzero} == {(0, 1), (1, 0)}
    assert sum(parts.values()) == pytest.approx(simulate(NV2, d), abs=1e-14)


def test_five_pulse_all_x_phases_do_not_match_closed_form():
    # Documents the pulse-phase choice: x-only storage pulses leave a baseline.
    d = make_descriptor("5p_eseem", tau1=0.9e-6, tau2=1.3e-6, t_free=6e-6)
    els = tuple(Pulse(el.angle, "x") if isinstance(el, Pulse) else el for el in d.elements)
    x_only = simulate(NV2, SequenceDescriptor(els))
    closed = signals.five_pulse_eseem(NV2, signals.EseemTiming(0.9e-6, 1.3e-6, 6e-6))
    assert abs(x_only - closed) > 0.1


def test_readout_axes():
    reg = make_register([])
    d = SequenceDescriptor((Pulse(math.pi / 2),), readout="y")
    assert simulate(reg, d) == pytest.approx(-1.0)
    assert simulate(reg, SequenceDescriptor((Pulse(math.pi / 2),), readout="x")) == pytest.approx(0.0, abs=1e-15)
