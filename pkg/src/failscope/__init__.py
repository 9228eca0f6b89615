"""failscope: find where an LLM is error-prone, describe it, and teach it.

Pipeline stages: partition a dataset by model correctness (corpus), flag
worth-to-teach groups (metrics), generate failure patterns four ways
(discovery over embedding_space/mapper through llm_gateway), score the
generations against references (judge, stats), and measure whether teaching
the patterns helps people anticipate failures (study).
"""

__version__ = "0.1.0"

from .corpus import EvalDataset, Group, Instance, PredictionRecord
from .metrics import UNBOUNDED, FlagReport, GroupMetrics
from .discovery import DiscoveryConfig, FailurePattern
from .judge import GroundTruthPattern, MatchRating, RecallReport

__all__ = [
    "__version__",
    "EvalDataset",
    "Group",
    "Instance",
    "PredictionRecord",
    "UNBOUNDED",
    "FlagReport",
    "GroupMetrics",
    "DiscoveryConfig",
    "FailurePattern",
    "GroundTruthPattern",
    "MatchRating",
    "RecallReport",
]
