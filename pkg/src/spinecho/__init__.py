"""Exact spin-echo simulations of small dipolar spin-1/2 clusters."""
from .engine import Interaction, ModelKind, PulseModel, run_dr
from .errors import SpinEchoError
from .lattice import DisorderConfig, LatticeSpec, sample_realization
from .observables import Detection
from .runner import EnsembleRunner, run_ensemble
from .sequence import Sequence

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "DisorderConfig",
    "EnsembleRunner",
    "Interaction",
    "LatticeSpec",
    "ModelKind",
    "PulseModel",
    "Sequence",
    "SpinEchoError",
    "run_dr",
    "run_ensemble",
    "sample_realization",
]
