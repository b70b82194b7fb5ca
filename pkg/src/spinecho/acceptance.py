"""Fast identities every build must satisfy, run by ``spinecho check``.

Each check draws its couplings from a fixed seed, so a failure is
reproducible.  The long ensemble comparisons live in the slow test
suite.
"""
from __future__ import annotations

import math
from typing import Dict

import numpy as np

from .aht import (
    cpmg_closed_forms,
    cycle_defect,
    magnus0,
    magnus_terms,
    toggling_frame,
)
from .assertions import assert_above, assert_below, assert_within
from .engine import Interaction, PulseModel, analytic_ising_echo, run_dr
from .framework import CheckCase, CheckSuite
from .lattice import CouplingTable, DisorderRealization
from .observables import coherence_orders
from .propagators import PropagatorCache
from .sequence import (
    TABLE1,
    build_hahn,
    build_ostroff_waugh,
    build_table1,
)
from .spinops import (
    TWO_PI,
    dipolar_hamiltonian,
    free_hamiltonian,
    rotated_dipolar_ops,
)

SEED = 20240917


def random_couplings(n: int, rng: np.random.Generator,
                     scale_hz: float) -> CouplingTable:
    b = np.triu(rng.normal(0.0, scale_hz, (n, n)), 1)
    return CouplingTable(b + b.T)


def random_realization(n: int, rng: np.random.Generator,
                       scale_hz: float, offset_hz: float = 0.0
                       ) -> DisorderRealization:
    return DisorderRealization.from_couplings(
        random_couplings(n, rng, scale_hz), omega_z=offset_hz)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def measure_cpmg_vs_hahn(n_spins: int = 5, n_echoes: int = 8
                         ) -> Dict[str, float]:
    rng = np.random.default_rng(SEED)
    dr = random_realization(n_spins, rng, 1e3, offset_hz=350.0)
    tau = 40e-6
    model = PulseModel.delta()
    train = run_dr(dr, build_table1("CPMG", tau, n_echoes), model)
    worst = 0.0
    for k in range(1, n_echoes + 1):
        hahn = run_dr(dr, build_hahn(k * tau), model)
        worst = max(worst, abs(train.signed[k - 1] - hahn.signed[0]))
    return {"max_deviation": worst}


def measure_phase_variants(n_spins: int = 5, n_echoes: int = 12
                           ) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 1)
    dr = random_realization(n_spins, rng, 1e3, offset_hz=-420.0)
    model = PulseModel.delta()
    trains = [run_dr(dr, build_table1(name, 30e-6, n_echoes), model)
              for name in TABLE1]
    ref = trains[0].magnitudes
    worst = max(float(np.abs(t.magnitudes - ref).max()) for t in trains)
    return {"max_deviation": worst}


def measure_closed_forms(cases: int = 20) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 2)
    worst0 = worst1 = 0.0
    for k in range(cases):
        n = 3 + k % 2
        couplings = random_couplings(n, rng, 2e3)
        omega_z = float(rng.uniform(-500.0, 500.0))
        tau = float(rng.uniform(1e-6, 2e-5))
        t_p = float(rng.uniform(1e-6, 2e-5))
        h0 = free_hamiltonian(couplings, omega_z)
        cycle = build_table1("CPMG", tau, 2).cycle
        terms = magnus_terms(toggling_frame(cycle, h0, math.pi / t_p))
        closed = cpmg_closed_forms(couplings, omega_z, tau, t_p)
        worst0 = max(worst0, _relative(terms.h0.matrix, closed.h0.matrix))
        worst1 = max(worst1, _relative(terms.h1.matrix, closed.h1.matrix))
    return {"h0_residual": worst0, "h1_residual": worst1}


def measure_magnus_scaling(cases: int = 10) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 3)
    cycle = build_table1("CPMG", 10e-6, 2).cycle
    omega1 = TWO_PI * 50e3
    ratios = []
    for _ in range(cases):
        dr = random_realization(3, rng, 200.0,
                                offset_hz=float(rng.uniform(-100, 100)))
        full = cycle_defect(dr, cycle, omega1, order=1)
        half = cycle_defect(dr.scaled(0.5), cycle, omega1, order=1)
        ratios.append(full / half)
    return {"min_ratio": min(ratios), "max_ratio": max(ratios)}


def measure_ostroff_waugh(n_spins: int = 4) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 4)
    couplings = random_couplings(n_spins, rng, 1e3)
    cycle = build_ostroff_waugh(15e-6, 1).cycle
    hyy = rotated_dipolar_ops(couplings)[0].matrix
    out = {}
    for label, omega1 in (("delta", math.inf), ("finite", TWO_PI * 40e3)):
        frame = toggling_frame(cycle, dipolar_hamiltonian(couplings),
                               omega1)
        out[f"{label}_residual"] = _relative(magnus0(frame).matrix,
                                             -0.5 * hyy)
    return out


def measure_ising_oracle(n_spins: int = 6, n_echoes: int = 20
                         ) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 5)
    dr = random_realization(n_spins, rng, 1e3)
    train = run_dr(dr, build_table1("CPMG", 25e-6, n_echoes),
                   PulseModel.delta(), interaction=Interaction.ISING)
    analytic = analytic_ising_echo(dr.couplings, train.times)

    b = 730.0
    pair = CouplingTable(np.array([[0.0, b], [b, 0.0]]))
    times = np.linspace(0.0, 5e-3, 41)
    two_spin = analytic_ising_echo(pair, times)
    return {
        "simulation_deviation": float(np.abs(train.signed - analytic).max()),
        "two_spin_deviation": float(
            np.abs(two_spin - np.cos(TWO_PI * b * times)).max()),
    }


def measure_coherence_confinement(n_spins: int = 6, n_echoes: int = 48
                                  ) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 6)
    dr = random_realization(n_spins, rng, 2e3)
    seq = build_table1("CPMG", 1e-6, n_echoes)
    echoes = range(1, n_echoes + 1)
    delta = run_dr(dr, seq, PulseModel.delta(), snapshot_echoes=echoes)
    exact = run_dr(dr, seq, PulseModel.exact_finite(TWO_PI * 40e3),
                   snapshot_echoes=[10])
    return {
        "delta_outside": max(coherence_orders(s.rho).outside()
                             for s in delta.snapshots),
        "exact_outside_echo10": coherence_orders(
            exact.snapshot_at(10).rho).outside(),
    }


def measure_conservation(n_spins: int = 5, n_echoes: int = 40
                         ) -> Dict[str, float]:
    rng = np.random.default_rng(SEED + 7)
    dr = random_realization(n_spins, rng, 2e3, offset_hz=150.0)
    seq = build_table1("CPMG", 36e-6, n_echoes)
    model = PulseModel.exact_finite(TWO_PI * 35.7e3)
    train = run_dr(dr, seq, model)
    cache = PropagatorCache(free_hamiltonian(dr.couplings, dr.omega_z),
                            omega1=model.omega1)
    cache.product(seq.cycle)
    return {
        "trace_drift": train.trace_drift,
        "purity_drift": train.purity_drift,
        "unitarity_defect": cache.max_unitarity_defect(),
    }


def build_suite() -> CheckSuite:
    cases = [
        CheckCase("delta_cpmg_matches_hahn", measure_cpmg_vs_hahn,
                  [assert_below("max_deviation", 1e-10)]),
        CheckCase("delta_phase_variants_agree", measure_phase_variants,
                  [assert_below("max_deviation", 1e-10)]),
        CheckCase("cpmg_closed_forms", measure_closed_forms,
                  [assert_below("h0_residual", 1e-10),
                   assert_below("h1_residual", 1e-6)]),
        CheckCase("magnus_third_order_scaling", measure_magnus_scaling,
                  [assert_within("min_ratio", 6.0, 10.0),
                   assert_within("max_ratio", 6.0, 10.0)]),
        CheckCase("ostroff_waugh_average", measure_ostroff_waugh,
                  [assert_below("delta_residual", 1e-10),
                   assert_below("finite_residual", 1e-10)]),
        CheckCase("ising_oracle", measure_ising_oracle,
                  [assert_below("simulation_deviation", 1e-8),
                   assert_below("two_spin_deviation", 1e-12)]),
        CheckCase("coherence_confinement", measure_coherence_confinement,
                  [assert_below("delta_outside", 1e-10),
                   assert_above("exact_outside_echo10", 1e-3)]),
        CheckCase("conservation", measure_conservation,
                  [assert_below("trace_drift", 1e-10),
                   assert_below("purity_drift", 1e-10),
                   assert_below("unitarity_defect", 1e-12)]),
    ]
    return CheckSuite("spinecho acceptance", cases)
