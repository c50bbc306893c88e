"""Tokenization, caption-quality metrics, and term-set extraction."""

from .metrics import (
    IdfTable,
    MetricError,
    ScoreConfig,
    TokenSeq,
    build_idf,
    build_idf_for_config,
    cider_d,
    meteor_lite,
    ngram_counts,
    tokenize,
)
from .porter import stem
from .terms import (
    LexiconError,
    TermLexicon,
    default_lexicon,
    extract_terms,
    load_lexicon,
    parse_lexicon,
    term_iou,
)

__all__ = [
    "IdfTable",
    "LexiconError",
    "MetricError",
    "ScoreConfig",
    "TermLexicon",
    "TokenSeq",
    "build_idf",
    "build_idf_for_config",
    "cider_d",
    "default_lexicon",
    "extract_terms",
    "load_lexicon",
    "meteor_lite",
    "ngram_counts",
    "parse_lexicon",
    "stem",
    "term_iou",
    "tokenize",
]
