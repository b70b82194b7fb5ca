import math

import numpy as np
import pytest

from spinecho.acceptance import random_realization
from spinecho.aht import (
    cpmg_closed_forms,
    cycle_defect,
    magnus0,
    magnus1,
    magnus_terms,
    realization_hamiltonian,
    toggling_frame,
)
from spinecho.errors import NonCyclicSequenceError, SequenceError
from spinecho.sequence import (
    Delay,
    EchoMarker,
    Pulse,
    build_hahn,
    build_ostroff_waugh,
    build_table1,
)
from spinecho.spinops import (
    TWO_PI,
    X,
    Y,
    Z,
    collective_op,
    dipolar_hamiltonian,
    free_hamiltonian,
    rotated_dipolar_ops,
)

OMEGA1 = TWO_PI * 40e3


def relative(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_delta_frame_layout(couplings):
    tau = 10e-6
    frame = toggling_frame(build_table1("CPMG", tau, 2),
                           free_hamiltonian(couplings, 0.0))
    assert frame.unroll == 1
    assert [iv.tag for iv in frame.intervals] == ["delay"] * 4
    assert math.isclose(frame.t_c, 4 * tau)


def test_finite_frame_layout(couplings):
    tau = 10e-6
    frame = toggling_frame(build_table1("CPMG", tau, 2).cycle,
                           free_hamiltonian(couplings, 0.0), OMEGA1)
    tags = [iv.tag for iv in frame.intervals]
    assert math.isclose(frame.t_c, 4 * tau + 2 * math.pi / OMEGA1)
    assert tags.count("pulse 180(+Y)") == 2
    assert tags.count("delay") == 4


def test_finite_pulse_midpoint_sample(couplings):
    tau = 10e-6
    offset = 300.0
    t_p = math.pi / OMEGA1
    frame = toggling_frame(build_table1("CPMG", tau, 2).cycle,
                           free_hamiltonian(couplings, offset), OMEGA1)
    hyy, _, h_sym = (op.matrix for op in rotated_dipolar_ops(couplings))
    ix = TWO_PI * offset * collective_op(couplings.n, X).matrix
    expected = ix - 0.5 * hyy - h_sym
    assert relative(frame.sample(tau + t_p / 2).matrix, expected) < 1e-10


def test_hahn_frame_is_unrolled(couplings):
    frame = toggling_frame(build_hahn(5e-6), free_hamiltonian(couplings, 0))
    assert frame.unroll == 2
    assert len(frame.events) == 8


def test_offset_changes_sign_after_pi(couplings):
    tau = 10e-6
    offset = 400.0
    frame = toggling_frame(build_table1("CPMG", tau, 2),
                           free_hamiltonian(couplings, offset))
    hzz = dipolar_hamiltonian(couplings).matrix
    iz = TWO_PI * offset * collective_op(couplings.n, Z).matrix
    assert np.allclose(frame.sample(0.5 * tau).matrix, hzz + iz)
    assert np.allclose(frame.sample(1.5 * tau).matrix, hzz - iz)


def test_delta_cpmg_average_is_secular(couplings):
    frame = toggling_frame(build_table1("CPMG", 10e-6, 2),
                           free_hamiltonian(couplings, 300.0))
    hzz = dipolar_hamiltonian(couplings).matrix
    terms = magnus_terms(frame)
    assert relative(terms.h0.matrix, hzz) < 1e-12
    assert terms.h1.norm() < 1e-9 * terms.h0.norm()


@pytest.mark.parametrize("case", range(4))
def test_cpmg_closed_forms(case):
    rng = np.random.default_rng(100 + case)
    dr = random_realization(3 + case % 2, rng, 2e3,
                            offset_hz=float(rng.uniform(-500, 500)))
    tau = float(rng.uniform(1e-6, 2e-5))
    t_p = float(rng.uniform(1e-6, 2e-5))
    frame = toggling_frame(build_table1("CPMG", tau, 2),
                           realization_hamiltonian(dr), math.pi / t_p)
    closed = cpmg_closed_forms(dr.couplings, dr.omega_z, tau, t_p)
    assert math.isclose(closed.t_c, frame.t_c)
    assert relative(magnus0(frame).matrix, closed.h0.matrix) < 1e-10
    assert relative(magnus1(frame).matrix, closed.h1.matrix) < 1e-6


@pytest.mark.parametrize("omega1", [math.inf, OMEGA1])
def test_ostroff_waugh_average(couplings, omega1):
    frame = toggling_frame(build_ostroff_waugh(15e-6, 1),
                           dipolar_hamiltonian(couplings), omega1)
    hyy = rotated_dipolar_ops(couplings)[0].matrix
    assert relative(magnus0(frame).matrix, -0.5 * hyy) < 1e-10


def test_defect_shrinks_as_cube(rng):
    dr = random_realization(3, rng, 200.0, offset_hz=50.0)
    cycle = build_table1("CPMG", 10e-6, 2)
    omega1 = TWO_PI * 50e3
    full = cycle_defect(dr, cycle, omega1, order=1)
    half = cycle_defect(dr.scaled(0.5), cycle, omega1, order=1)
    assert 6.0 < full / half < 10.0
    assert cycle_defect(dr, cycle, omega1, order=0) > full


def test_average_order_is_checked(couplings):
    terms = magnus_terms(toggling_frame(build_table1("CPMG", 1e-6, 2),
                                        free_hamiltonian(couplings, 0.0)))
    assert terms.average(0) is terms.h0
    with pytest.raises(SequenceError):
        terms.average(2)


def test_non_cyclic_cycle_is_rejected(couplings):
    cycle = (Delay(1e-6), Pulse(math.pi / 4, Y), Delay(1e-6), EchoMarker())
    with pytest.raises(NonCyclicSequenceError):
        toggling_frame(cycle, free_hamiltonian(couplings, 0.0))
