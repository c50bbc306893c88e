"""Pairwise human-preference study: storage and HTTP service."""

from .app import create_app
from .store import (
    DuplicateJudgment,
    JudgmentStore,
    StudyError,
    StudyPair,
    StudySession,
    UnknownSession,
    parse_pairs_spec,
    swap_views,
    tally_records,
)

__all__ = [
    "DuplicateJudgment",
    "JudgmentStore",
    "StudyError",
    "StudyPair",
    "StudySession",
    "UnknownSession",
    "create_app",
    "parse_pairs_spec",
    "swap_views",
    "tally_records",
]
