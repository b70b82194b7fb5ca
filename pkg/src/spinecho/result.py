from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import SpinEchoError, require
from .observables import Detection, Snapshot

CSV_COLUMNS = ("echo_index", "time_s", "mean", "stderr", "magnitude_mean")


@dataclass(frozen=True, eq=False)
class EchoTrain:
    """Echo signals of one realization, one entry per recorded echo."""

    echo_indices: np.ndarray
    times: np.ndarray
    signed: np.ndarray
    magnitudes: np.ndarray
    n_detected: int
    detection: Detection
    trace_drift: float = 0.0
    purity_drift: float = 0.0
    eigendecompositions: int = 0
    snapshots: Tuple[Snapshot, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.times)
        require(
            len(self.echo_indices) == n and len(self.signed) == n
            and len(self.magnitudes) == n,
            "echo train columns have different lengths",
        )
        require(bool(np.all(np.diff(self.times) > 0)),
                "echo times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def snapshot_at(self, echo_index: int) -> Snapshot:
        for s in self.snapshots:
            if s.echo_index == echo_index:
                return s
        raise SpinEchoError(f"no snapshot recorded at echo {echo_index}")


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    echo_indices: np.ndarray
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    magnitude_mean: np.ndarray
    n_realizations: int
    detection: Detection
    seeds: Tuple[int, ...] = ()
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_trains(
        cls,
        trains: Sequence[EchoTrain],
        seeds: Sequence[int] = (),
    ) -> "EnsembleResult":
        """Reduce in the given order (ascending realization index)."""
        require(len(trains) > 0, "no realizations to reduce")
        first = trains[0]
        for t in trains[1:]:
            require(
                np.array_equal(t.echo_indices, first.echo_indices)
                and np.array_equal(t.times, first.times),
                "realizations recorded different echo times",
            )
        signed = np.stack([t.signed for t in trains])
        mags = np.stack([t.magnitudes for t in trains])
        n = len(trains)
        if n > 1:
            stderr = signed.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            stderr = np.zeros(signed.shape[1])
        diagnostics = {
            "max_trace_drift": max(t.trace_drift for t in trains),
            "max_purity_drift": max(t.purity_drift for t in trains),
            "max_eigendecompositions": float(
                max(t.eigendecompositions for t in trains)),
        }
        return cls(
            echo_indices=first.echo_indices.copy(),
            times=first.times.copy(),
            mean=signed.mean(axis=0),
            stderr=stderr,
            magnitude_mean=mags.mean(axis=0),
            n_realizations=n,
            detection=first.detection,
            seeds=tuple(int(s) for s in seeds),
            diagnostics=diagnostics,
        )

    @classmethod
    def concatenate(cls, parts: Iterable["EnsembleResult"]
                    ) -> "EnsembleResult":
        """Stack single-echo results (a tau sweep) into one table,
        renumbering echoes 1..k."""
        parts = list(parts)
        require(len(parts) > 0, "nothing to concatenate")
        times = np.concatenate([p.times for p in parts])
        return cls(
            echo_indices=np.arange(1, len(times) + 1),
            times=times,
            mean=np.concatenate([p.mean for p in parts]),
            stderr=np.concatenate([p.stderr for p in parts]),
            magnitude_mean=np.concatenate([p.magnitude_mean for p in parts]),
            n_realizations=parts[0].n_realizations,
            detection=parts[0].detection,
            seeds=parts[0].seeds,
            diagnostics={
                k: max(p.diagnostics.get(k, 0.0) for p in parts)
                for k in parts[0].diagnostics
            },
        )

    def window_mean(self, first: int, last: int) -> Tuple[float, float]:
        """Mean signal over echoes first..last inclusive, with its stderr.
        """
        sel = (self.echo_indices >= first) & (self.echo_indices <= last)
        require(bool(sel.any()), f"no echoes in window {first}..{last}")
        # echoes of one realization are correlated: bound, not quadrature
        err = float(self.stderr[sel].mean())
        return float(self.mean[sel].mean()), err

    def at_echo(self, index: int) -> Tuple[float, float]:
        sel = np.nonzero(self.echo_indices == index)[0]
        require(len(sel) == 1, f"echo {index} was not recorded")
        i = int(sel[0])
        return float(self.mean[i]), float(self.stderr[i])

    def rows(self) -> List[Tuple[int, float, float, float, float]]:
        return [
            (int(i), float(t), float(m), float(s), float(g))
            for i, t, m, s, g in zip(self.echo_indices, self.times,
                                     self.mean, self.stderr,
                                     self.magnitude_mean)
        ]
