from __future__ import annotations

import platform
import sys
from dataclasses import asdict, dataclass
from enum import Enum, auto
from importlib import metadata
from typing import Dict

_TRACKED = ("spinecho-sim", "numpy", "scipy", "joblib", "threadpoolctl")


class OS(Enum):
    LINUX = auto()
    MACOS = auto()
    WINDOWS = auto()
    OTHER = auto()


class Arch(Enum):
    X86_64 = auto()
    ARM64 = auto()
    OTHER = auto()


@dataclass(frozen=True)
class RuntimeInfo:
    """Where a run executed; recorded in output sidecars."""

    os: OS
    arch: Arch
    machine: str
    python: str
    versions: Dict[str, str]

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["os"] = self.os.name.lower()
        data["arch"] = self.arch.name.lower()
        return data


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def detect_runtime() -> RuntimeInfo:
    system = platform.system().lower()
    machine = platform.machine().lower()

    if system == "darwin":
        os_ = OS.MACOS
    elif system == "linux":
        os_ = OS.LINUX
    elif system == "windows":
        os_ = OS.WINDOWS
    else:
        os_ = OS.OTHER

    if machine in ("x86_64", "amd64"):
        arch = Arch.X86_64
    elif machine in ("arm64", "aarch64"):
        arch = Arch.ARM64
    else:
        arch = Arch.OTHER

    return RuntimeInfo(
        os=os_,
        arch=arch,
        machine=machine,
        python=sys.version.split()[0],
        versions={name: _version(name) for name in _TRACKED},
    )
