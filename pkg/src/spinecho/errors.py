from __future__ import annotations

from typing import Optional, Sequence, Type


class SpinEchoError(Exception):
    pass


class ConfigError(SpinEchoError):
    def __init__(self, message: str, path: Optional[str] = None) -> None:
        text = f"{path}: {message}" if path else message
        super().__init__(text)
        self.path = path
        self.message = message

    def __reduce__(self):
        return (type(self), (self.message, self.path))


class OperatorError(SpinEchoError):
    pass


class LatticeError(SpinEchoError):
    pass


class SamplingError(LatticeError):
    pass


class SequenceError(SpinEchoError):
    pass


class SequenceSyntaxError(SequenceError):
    def __init__(self, message: str, text: str, offset: int) -> None:
        line = text.count("\n", 0, offset) + 1
        column = offset - (text.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.text = text
        self.offset = offset
        self.line = line
        self.column = column

    def __reduce__(self):
        return (type(self), (self.message, self.text, self.offset))


class NonCyclicSequenceError(SequenceError):
    def __init__(self, angle_deg: float, axis: Sequence[float]) -> None:
        ax = ", ".join(f"{c:+.4f}" for c in axis)
        super().__init__(
            f"cycle is not rf-cyclic: net rotation {angle_deg:.6g} deg "
            f"about ({ax})"
        )
        self.angle_deg = angle_deg
        self.axis = tuple(axis)

    def __reduce__(self):
        return (type(self), (self.angle_deg, self.axis))


class QuadratureError(SpinEchoError):
    pass


class SnapshotError(SpinEchoError):
    pass


class RealizationError(SpinEchoError):
    def __init__(self, index: int, reason: str) -> None:
        super().__init__(f"realization {index}: {reason}")
        self.index = index
        self.reason = reason

    def __reduce__(self):
        return (type(self), (self.index, self.reason))


def require(
    predicate: bool,
    msg: str,
    error: Type[SpinEchoError] = SpinEchoError,
) -> None:
    if not predicate:
        raise error(msg)
