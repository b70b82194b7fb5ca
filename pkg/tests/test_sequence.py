import dataclasses
import math

import numpy as np
import pytest

from spinecho.engine import PulseModel, run_dr
from spinecho.errors import NonCyclicSequenceError, SequenceError
from spinecho.lattice import DisorderRealization
from spinecho.sequence import (
    TABLE1,
    Delay,
    EchoMarker,
    Pulse,
    PulseWidth,
    Sequence,
    aht_unroll,
    bb1_composite,
    build_bb1,
    build_hahn,
    build_ostroff_waugh,
    build_table1,
    is_rf_cyclic,
    net_rotation,
    rf_rotation,
)
from spinecho.spinops import (
    MINUS_Y,
    X,
    Y,
    Z,
    SpinAxis,
    spin_half_rotation,
)


@pytest.mark.parametrize("name", sorted(TABLE1))
def test_table1_layout(name):
    seq = build_table1(name.lower(), 36e-6, 6)
    assert seq.name == name
    assert seq.repeats == 3
    assert seq.n_echoes == 6
    assert seq.markers_per_cycle == 2
    (excite,) = seq.prologue
    assert excite.width is PulseWidth.DELTA
    assert excite.phase == X
    assert [p.phase for p in seq.pulses()] == list(TABLE1[name][0])


def test_cp_echo_phases_alternate():
    seq = build_table1("CP", 1e-6, 2)
    markers = [e for e in seq.cycle if isinstance(e, EchoMarker)]
    assert [m.expected_phase for m in markers] == [MINUS_Y, Y]


@pytest.mark.parametrize("n_echoes", [0, 3])
def test_table1_needs_even_echoes(n_echoes):
    with pytest.raises(SequenceError):
        build_table1("CPMG", 1e-6, n_echoes)


def test_table1_unknown_name():
    with pytest.raises(SequenceError):
        build_table1("XY4", 1e-6, 2)


def test_cycle_time_with_finite_pulses():
    tau = 10e-6
    omega1 = 2 * math.pi * 50e3
    seq = build_table1("CPMG", tau, 8)
    assert math.isclose(seq.cycle_time(), 4 * tau)
    assert math.isclose(seq.cycle_time(omega1), 4 * tau + 2 * math.pi / omega1)
    assert math.isclose(seq.total_time(omega1), 4 * seq.cycle_time(omega1))


def test_hahn():
    seq = build_hahn(50e-6)
    assert seq.name == "hahn"
    assert seq.n_echoes == 1
    assert math.isclose(seq.total_time(), 100e-6)


@pytest.mark.parametrize("seq,unroll", [
    (build_table1("CPMG", 1e-6, 2), 1),
    (build_table1("CP", 1e-6, 2), 1),
    (build_table1("APCPMG", 1e-6, 2), 1),
    (build_hahn(1e-6), 2),
    (build_ostroff_waugh(1e-6, 1), 2),
])
def test_aht_unroll(seq, unroll):
    assert aht_unroll(seq.cycle) == unroll


def test_non_cyclic_cycle():
    cycle = (Delay(1e-6), Pulse(math.pi / 4, Y), Delay(1e-6), EchoMarker())
    with pytest.raises(NonCyclicSequenceError) as info:
        aht_unroll(cycle)
    assert math.isclose(info.value.angle_deg, 45.0)
    assert np.allclose(info.value.axis, (0.0, 1.0, 0.0))


def test_net_rotation_of_ninety_y():
    angle, axis = net_rotation(spin_half_rotation(math.pi / 2, Y))
    assert math.isclose(angle, 90.0)
    assert np.allclose(axis, (0.0, 1.0, 0.0))


def test_rf_rotation_order():
    events = (Pulse(math.pi / 2, X), Pulse(math.pi / 2, Y))
    expected = (spin_half_rotation(math.pi / 2, Y)
                @ spin_half_rotation(math.pi / 2, X))
    assert np.allclose(rf_rotation(events), expected)
    assert not is_rf_cyclic(events)


@pytest.mark.parametrize("phase", [X, Y, SpinAxis(0.3)])
def test_bb1_is_a_pi_pulse(phase):
    u = rf_rotation(bb1_composite(phase))
    target = spin_half_rotation(math.pi, phase)
    overlap = abs(np.trace(target.conj().T @ u)) / 2
    assert math.isclose(overlap, 1.0, abs_tol=1e-12)


def test_bb1_train():
    seq = build_bb1(10e-6, 4, "CP")
    assert seq.name == "BB1-CP"
    assert len(seq.pulses()) == 8
    assert seq.n_echoes == 4
    assert aht_unroll(seq.cycle) == 1


def inversion_fidelity(pulses, scale):
    miscalibrated = [dataclasses.replace(p, angle=scale * p.angle)
                     for p in pulses]
    u = rf_rotation(miscalibrated)
    iz = Z.spin_half()
    flipped = u @ iz @ u.conj().T
    return -np.trace(flipped @ iz).real / np.trace(iz @ iz).real


def test_bb1_tolerates_flip_angle_error():
    plain = inversion_fidelity([Pulse(math.pi, Y)], 0.9)
    composite = inversion_fidelity(bb1_composite(Y), 0.9)
    assert math.isclose(plain, math.cos(0.1 * math.pi))
    assert composite > 0.9999
    assert composite > plain


def test_bb1_train_matches_cpmg_with_ideal_pulses(couplings):
    dr = DisorderRealization.from_couplings(couplings)
    bb1 = run_dr(dr, build_bb1(20e-6, 10), PulseModel.delta())
    plain = run_dr(dr, build_table1("CPMG", 20e-6, 10), PulseModel.delta())
    assert np.allclose(bb1.times, plain.times)
    assert np.allclose(bb1.signed, plain.signed, atol=1e-12)


def test_ostroff_waugh_train():
    seq = build_ostroff_waugh(5e-6, 3)
    assert seq.name == "ostroff_waugh"
    assert seq.markers_per_cycle == 2
    assert seq.n_echoes == 6
    assert all(math.isclose(p.angle, math.pi / 2) for p in seq.pulses())


def test_sequence_validation():
    with pytest.raises(SequenceError):
        Sequence((Delay(1e-6),), (EchoMarker(),), 1)
    with pytest.raises(SequenceError):
        Sequence((), (Delay(1e-6),), 2)
    with pytest.raises(SequenceError):
        Delay(-1.0)
    with pytest.raises(SequenceError):
        Pulse(0.0, X)


def test_with_repeats_keeps_name():
    seq = build_table1("APCP", 1e-6, 2).with_repeats(5)
    assert seq.name == "APCP"
    assert seq.n_echoes == 10
