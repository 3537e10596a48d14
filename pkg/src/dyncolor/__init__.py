"""Dynamic (delta + 1)-vertex coloring: sequential, batch, distributed and deamortized engines."""

from .batch_engine import BatchEngine, BatchTrace, UpdateBatch
from .congest import CongestSimulator, MessageStats, RoundReport
from .core_state import UNCOLORED, ColoringState, level_pmf, num_levels
from .deamortize import DeamortizedColoring
from .errors import (
    ColoringError,
    DegreeOverflow,
    DuplicateEdge,
    FullSet,
    InvalidUpdate,
    LoopEdge,
    MissingEdge,
    NoCleanCopy,
    SchemaError,
    VertexOutOfRange,
    WorkloadError,
)
from .sampler import ComplementSampler, MemberSampler, UsedColors
from .seq_engine import RecolorTrace, SequentialEngine
from .workload import Workload, gen_workload

__all__ = [
    "UNCOLORED", "BatchEngine", "BatchTrace", "ColoringError", "ColoringState",
    "ComplementSampler", "CongestSimulator", "DeamortizedColoring", "DegreeOverflow",
    "DuplicateEdge", "FullSet", "InvalidUpdate", "LoopEdge", "MemberSampler", "MessageStats",
    "MissingEdge", "NoCleanCopy", "RecolorTrace", "RoundReport", "SchemaError",
    "SequentialEngine", "UpdateBatch", "UsedColors", "VertexOutOfRange", "Workload",
    "WorkloadError", "gen_workload", "level_pmf", "num_levels",
]
