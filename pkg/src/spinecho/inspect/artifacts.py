from __future__ import annotations
from dataclasses import dataclass
from enum import Enum, auto
from pathlib import Path
from typing import List, Tuple

import numpy as np

from ..errors import SnapshotError
from ..observables import SNAPSHOT_FORMAT
from ..result import CSV_COLUMNS


class ArtifactKind(Enum):
    SNAPSHOT_JSON = auto()
    PPM_P6 = auto()
    ECHO_CSV = auto()
    UNKNOWN = auto()


@dataclass(frozen=True)
class ArtifactInfo:
    path: Path
    kind: ArtifactKind


def _read_prefix(p: Path, n: int = 64) -> bytes:
    with p.open("rb") as f:
        return f.read(n)


def detect_artifact_kind(p: Path) -> ArtifactInfo:
    data = _read_prefix(p, 64)

    # binary PPM: "P6" then whitespace
    if len(data) >= 3 and data[0:2] == b"P6" and data[2:3].isspace():
        return ArtifactInfo(p, ArtifactKind.PPM_P6)

    txt = data.decode("utf-8", errors="ignore")
    if txt.startswith(",".join(CSV_COLUMNS)):
        return ArtifactInfo(p, ArtifactKind.ECHO_CSV)

    # the format tag is the first key written
    head = txt.lstrip()
    if head.startswith("{") and SNAPSHOT_FORMAT in head:
        return ArtifactInfo(p, ArtifactKind.SNAPSHOT_JSON)

    return ArtifactInfo(p, ArtifactKind.UNKNOWN)


def _header_fields(data: bytes, count: int) -> Tuple[List[bytes], int]:
    fields: List[bytes] = []
    pos = 0
    while len(fields) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise SnapshotError("truncated PPM header")
        fields.append(data[start:pos])
    # exactly one whitespace byte before the raster
    return fields, pos + 1


def read_ppm(p: Path) -> np.ndarray:
    """Pixels of a binary 8-bit PPM as an (height, width, 3) uint8 array.
    """
    data = Path(p).read_bytes()
    try:
        (magic, w, h, maxval), start = _header_fields(data, 4)
        width, height, depth = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise SnapshotError(f"{p}: bad PPM header") from exc
    if magic != b"P6" or depth != 255:
        raise SnapshotError(f"{p}: not an 8-bit P6 image")
    raster = np.frombuffer(data, dtype=np.uint8, offset=start)
    if raster.size != width * height * 3:
        raise SnapshotError(
            f"{p}: expected {width * height * 3} bytes of pixels, "
            f"got {raster.size}")
    return raster.reshape(height, width, 3)
