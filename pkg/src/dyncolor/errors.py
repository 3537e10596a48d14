"""Exception hierarchy shared by every engine mode."""


class ColoringError(Exception):
    """Base class for all errors raised by dyncolor."""


class InvalidUpdate(ColoringError, ValueError):
    """An edge update that violates the graph contract. Nothing is mutated."""

    def __init__(self, u: int, v: int, reason: str):
        super().__init__(f"invalid update ({u}, {v}): {reason}")
        self.u = u
        self.v = v


class LoopEdge(InvalidUpdate):
    def __init__(self, u: int, v: int):
        super().__init__(u, v, "loops are not allowed")


class DuplicateEdge(InvalidUpdate):
    def __init__(self, u: int, v: int):
        super().__init__(u, v, "edge already present")


class MissingEdge(InvalidUpdate):
    def __init__(self, u: int, v: int):
        super().__init__(u, v, "edge not present")


class DegreeOverflow(InvalidUpdate):
    def __init__(self, u: int, v: int, vertex: int, delta: int):
        super().__init__(u, v, f"vertex {vertex} already has degree {delta}")
        self.vertex = vertex


class VertexOutOfRange(InvalidUpdate):
    def __init__(self, u: int, v: int, n: int):
        super().__init__(u, v, f"vertex ids must lie in [0, {n})")


class OutOfRange(ColoringError, ValueError):
    """A color outside the palette universe [1, delta + 1]."""


class FullSet(ColoringError):
    """Sampling from the complement of a set that already covers the universe."""


class InvalidBatch(ColoringError, ValueError):
    """A sampler batch that cannot be applied atomically."""


class DuplicateInBatch(InvalidBatch):
    pass


class AbsentInBatch(InvalidBatch):
    pass


class PresentInBatch(InvalidBatch):
    pass


class NoCleanCopy(ColoringError):
    """Every deamortized copy still has queued or suspended work."""


class WorkloadError(ColoringError, ValueError):
    """Malformed or infeasible workload."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ColoringError, ValueError):
    """Metrics file does not match the expected schema."""
