from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from .engine import (
    Interaction,
    PulseModel,
    analytic_ising_echo,
    run_dr,
)
from .errors import RealizationError, require
from .lattice import DisorderConfig, LatticeSpec, sample_realization
from .observables import Detection, Snapshot
from .result import EchoTrain, EnsembleResult
from .sequence import Sequence as PulseSequence

logger = logging.getLogger(__name__)

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def split_seed(master_seed: int, index: int) -> int:
    """Seed of realization ``index``: splitmix64 of the master seed's
    stream, one gamma step per index."""
    z = (master_seed + (index + 1) * SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RunnerConfig:
    workers: int = 1
    backend: str = "loky"
    blas_threads: int = 1


@dataclass(frozen=True)
class EnsembleJob:
    spec: LatticeSpec
    disorder: DisorderConfig
    sequence: PulseSequence
    model: PulseModel
    detection: Detection = Detection.TOTAL
    interaction: Interaction = Interaction.DIPOLAR
    snapshot_echoes: Tuple[int, ...] = ()


@dataclass(frozen=True)
class AnalyticJob:
    spec: LatticeSpec
    disorder: DisorderConfig
    times: Tuple[float, ...]
    detection: Detection = Detection.TOTAL


@dataclass(frozen=True)
class EnsembleOutcome:
    result: EnsembleResult
    averaged: Dict[int, Snapshot] = field(default_factory=dict)
    first: Dict[int, Snapshot] = field(default_factory=dict)
    elapsed_s: float = 0.0


def _realize(job: EnsembleJob, index: int, seed: int, blas_threads: int
             ) -> EchoTrain:
    with threadpool_limits(limits=blas_threads):
        try:
            realization = sample_realization(job.spec, job.disorder, seed)
            return run_dr(
                realization,
                job.sequence,
                job.model,
                detection=job.detection,
                interaction=job.interaction,
                snapshot_echoes=job.snapshot_echoes,
                label=str(index),
            )
        except Exception as exc:
            reason = f"{type(exc).__name__}: {exc}"
            raise RealizationError(index, reason) from exc


def _realize_analytic(job: AnalyticJob, index: int, seed: int,
                      blas_threads: int) -> EchoTrain:
    with threadpool_limits(limits=blas_threads):
        try:
            realization = sample_realization(job.spec, job.disorder, seed)
            signal = analytic_ising_echo(realization.couplings, job.times,
                                         job.detection)
        except Exception as exc:
            reason = f"{type(exc).__name__}: {exc}"
            raise RealizationError(index, reason) from exc
    n_detected = (realization.n_spins
                  if job.detection is Detection.TOTAL else 1)
    return EchoTrain(
        echo_indices=np.arange(1, len(signal) + 1),
        times=np.asarray(job.times, dtype=float),
        signed=signal,
        magnitudes=np.abs(signal),
        n_detected=n_detected,
        detection=job.detection,
    )


class EnsembleRunner:
    """Runs realizations on a worker pool and reduces them in index order.
    """

    def __init__(self, cfg: Optional[RunnerConfig] = None) -> None:
        self._cfg = cfg or RunnerConfig()
        require(self._cfg.workers >= 1,
                f"workers must be >= 1, got {self._cfg.workers}")

    @property
    def config(self) -> RunnerConfig:
        return self._cfg

    def _map(
        self,
        fn: Callable[..., EchoTrain],
        job,
        seeds: Sequence[int],
    ) -> Iterator[EchoTrain]:
        parallel = Parallel(
            n_jobs=self._cfg.workers,
            backend=self._cfg.backend,
            return_as="generator",
        )
        return parallel(
            delayed(fn)(job, k, seed, self._cfg.blas_threads)
            for k, seed in enumerate(seeds)
        )

    def run(self, job: EnsembleJob, n_dr: int, master_seed: int
            ) -> EnsembleOutcome:
        require(n_dr >= 1, f"n_dr must be >= 1, got {n_dr}")
        seeds = [split_seed(master_seed, k) for k in range(n_dr)]
        logger.info(
            "%s, %s model, %d spins: %d realizations on %d worker(s)",
            job.sequence.name or "sequence", job.model.label,
            job.disorder.n_spins, n_dr, self._cfg.workers,
        )
        started = time.perf_counter()
        trains: List[EchoTrain] = []
        sums: Dict[int, np.ndarray] = {}
        first: Dict[int, Snapshot] = {}
        for train in self._map(_realize, job, seeds):
            for snap in train.snapshots:
                if snap.echo_index not in sums:
                    sums[snap.echo_index] = np.zeros_like(snap.rho)
                    first[snap.echo_index] = snap
                sums[snap.echo_index] = sums[snap.echo_index] + snap.rho
            trains.append(_without_snapshots(train))
        result = EnsembleResult.from_trains(trains, seeds)
        averaged = {
            echo: Snapshot(
                time=first[echo].time,
                pulse_count=first[echo].pulse_count,
                rho=total / n_dr,
                echo_index=echo,
                realization="averaged",
            )
            for echo, total in sums.items()
        }
        elapsed = time.perf_counter() - started
        logger.info("finished %d realizations in %.1f s", n_dr, elapsed)
        return EnsembleOutcome(result, averaged, first, elapsed)

    def run_analytic(self, job: AnalyticJob, n_dr: int, master_seed: int
                     ) -> EnsembleResult:
        require(n_dr >= 1, f"n_dr must be >= 1, got {n_dr}")
        require(len(job.times) > 0, "no times to evaluate")
        seeds = [split_seed(master_seed, k) for k in range(n_dr)]
        logger.info("analytic Ising curve, %d spins, %d realizations",
                    job.disorder.n_spins, n_dr)
        trains = list(self._map(_realize_analytic, job, seeds))
        return EnsembleResult.from_trains(trains, seeds)


def _without_snapshots(train: EchoTrain) -> EchoTrain:
    if not train.snapshots:
        return train
    return EchoTrain(
        echo_indices=train.echo_indices,
        times=train.times,
        signed=train.signed,
        magnitudes=train.magnitudes,
        n_detected=train.n_detected,
        detection=train.detection,
        trace_drift=train.trace_drift,
        purity_drift=train.purity_drift,
        eigendecompositions=train.eigendecompositions,
    )


def run_ensemble(
    spec: LatticeSpec,
    config: DisorderConfig,
    sequence: PulseSequence,
    model: PulseModel,
    n_dr: int,
    master_seed: int,
    detection: Detection = Detection.TOTAL,
    workers: int = 1,
) -> EnsembleResult:
    job = EnsembleJob(spec, config, sequence, model, detection)
    runner = EnsembleRunner(RunnerConfig(workers=workers))
    return runner.run(job, n_dr, master_seed).result
