from .artifacts import (
    ArtifactInfo,
    ArtifactKind,
    detect_artifact_kind,
    read_ppm,
)

__all__ = ["ArtifactInfo", "ArtifactKind", "detect_artifact_kind", "read_ppm"]
