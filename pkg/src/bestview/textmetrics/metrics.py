"""Caption-quality metrics: tokenization, n-gram IDF statistics, a CIDEr-D
scorer and a self-contained METEOR variant.

The CIDEr-D score for a candidate/reference pair is

    (10/4) * sum_{n=1..4} penalty * cos(g_n(c), g_n(r))

where g_n are TF-IDF vectors over n-grams, the candidate's term frequencies
are clipped to the reference counts, idf(g) = ln(doc_count / df(g)) with
df(g) = 1 for n-grams unseen in the reference corpus, and
penalty = exp(-(len(c) - len(r))^2 / (2 * sigma^2)) with sigma = 6.

The METEOR variant aligns unigrams by exact match and then by Porter-stem
match (greedy, left to right, preferring alignments that continue the
current chunk), and omits the synonym/paraphrase stages that would require
external linguistic databases.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal, Sequence

from .porter import stem

MAX_NGRAM = 4
CIDER_SIGMA = 6.0
METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

_PUNCT_TABLE = str.maketrans("", "", '.,;:!?"()[]')


class MetricError(ValueError):
    """Raised for invalid metric inputs (e.g. an empty reference list)."""


@dataclass(frozen=True)
class TokenSeq:
    """An ordered sequence of lowercase tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        for t in self.tokens:
            if not t or t != t.strip() or any(c.isspace() for c in t):
                raise MetricError(f"invalid token {t!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, i: int) -> str:
        return self.tokens[i]

    def stemmed(self) -> "TokenSeq":
        return TokenSeq(tuple(stem(t) for t in self.tokens))


def tokenize(text: str) -> TokenSeq:
    """Lowercase, strip .,;:!?"()[] punctuation, split on whitespace.

    Apostrophes are kept inside tokens; empty text yields an empty sequence.
    """
    cleaned = text.lower().translate(_PUNCT_TABLE)
    return TokenSeq(tuple(cleaned.split()))


def ngram_counts(seq: Sequence[str], n: int) -> Counter:
    return Counter(
        tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)
    )


@dataclass
class IdfTable:
    """Document frequencies of 1..4-grams over a reference corpus."""

    doc_count: int
    df: dict[tuple[str, ...], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.doc_count < 1:
            raise MetricError("doc_count must be positive")
        for gram, count in self.df.items():
            if not 1 <= count <= self.doc_count:
                raise MetricError(
                    f"df({gram!r}) = {count} outside [1, {self.doc_count}]"
                )

    def idf(self, gram: tuple[str, ...]) -> float:
        """ln(doc_count / df); unseen n-grams get the maximal idf ln(doc_count)."""
        return math.log(self.doc_count / self.df.get(gram, 1))


def build_idf(references: Iterable[TokenSeq]) -> IdfTable:
    """Count, per n-gram, the number of reference documents containing it."""
    refs = list(references)
    if not refs:
        raise MetricError("cannot build an IDF table from zero references")
    df: dict[tuple[str, ...], int] = {}
    for ref in refs:
        seen: set[tuple[str, ...]] = set()
        for n in range(1, MAX_NGRAM + 1):
            seen.update(ngram_counts(ref.tokens, n))
        for gram in seen:
            df[gram] = df.get(gram, 0) + 1
    return IdfTable(doc_count=len(refs), df=df)


def cider_d(candidate: TokenSeq, reference: TokenSeq, idf: IdfTable) -> float:
    """CIDEr-D similarity of a candidate caption to a reference, in [0, 10]."""
    delta = len(candidate) - len(reference)
    penalty = math.exp(-(delta**2) / (2.0 * CIDER_SIGMA**2))
    total = 0.0
    for n in range(1, MAX_NGRAM + 1):
        cand = ngram_counts(candidate.tokens, n)
        ref = ngram_counts(reference.tokens, n)
        # candidate TF clipped to the reference count (the D-variant clipping)
        dot = 0.0
        norm_c = 0.0
        for gram, count in cand.items():
            clipped = min(count, ref.get(gram, 0))
            if clipped:
                w = idf.idf(gram)
                dot += clipped * w * ref[gram] * w
                norm_c += (clipped * w) ** 2
        norm_r = sum((count * idf.idf(gram)) ** 2 for gram, count in ref.items())
        if norm_c > 0.0 and norm_r > 0.0:
            total += penalty * dot / math.sqrt(norm_c * norm_r)
    return 10.0 * total / MAX_NGRAM


def _align(candidate: TokenSeq, reference: TokenSeq) -> list[tuple[int, int]]:
    """Greedy left-to-right unigram alignment: exact stage then stem stage.

    Within a stage, a candidate token matched against several free reference
    positions prefers the one continuing the current chunk, then the leftmost.
    Returns (candidate_index, reference_index) pairs sorted by candidate index.
    """
    cand_used = [False] * len(candidate)
    ref_used = [False] * len(reference)
    matches: dict[int, int] = {}

    stages = (
        (list(candidate.tokens), list(reference.tokens)),
        ([stem(t) for t in candidate.tokens], [stem(t) for t in reference.tokens]),
    )
    for keyed, ref_keyed in stages:
        for ci in range(len(candidate)):
            if cand_used[ci]:
                continue
            options = [
                rj
                for rj in range(len(reference))
                if not ref_used[rj] and ref_keyed[rj] == keyed[ci]
            ]
            if not options:
                continue
            prev = matches.get(ci - 1)
            if prev is not None and prev + 1 in options:
                rj = prev + 1
            else:
                rj = options[0]
            cand_used[ci] = True
            ref_used[rj] = True
            matches[ci] = rj
    return sorted(matches.items())


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev: tuple[int, int] | None = None
    for ci, rj in pairs:
        if prev is None or ci != prev[0] + 1 or rj != prev[1] + 1:
            chunks += 1
        prev = (ci, rj)
    return chunks


def meteor_lite(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Exact+stem METEOR score in [0, 1]; 0 when nothing aligns."""
    if len(candidate) == 0 or len(reference) == 0:
        return 0.0
    pairs = _align(candidate, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(candidate)
    recall = m / len(reference)
    f_mean = (precision * recall) / (
        METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall
    )
    chunks = _count_chunks(pairs)
    frag_penalty = METEOR_GAMMA * (chunks / m) ** METEOR_BETA
    return f_mean * (1.0 - frag_penalty)


@dataclass(frozen=True)
class ScoreConfig:
    """How captions are scored against narrations throughout the pipeline."""

    metric: Literal["cider", "meteor"] = "cider"
    stem_ngrams: bool = True  # stem tokens before CIDEr n-gram extraction

    def prepare(self, seq: TokenSeq) -> TokenSeq:
        if self.metric == "cider" and self.stem_ngrams:
            return seq.stemmed()
        return seq

    def score(
        self, candidate: TokenSeq, reference: TokenSeq, idf: IdfTable | None
    ) -> float:
        if self.metric == "cider":
            if idf is None:
                raise MetricError("CIDEr scoring requires an IDF table")
            return cider_d(self.prepare(candidate), self.prepare(reference), idf)
        return meteor_lite(candidate, reference)


def build_idf_for_config(
    narrations: Iterable[str], config: ScoreConfig
) -> IdfTable:
    """Tokenize narrations and build the IDF table under the config's
    preprocessing, so scoring and statistics stay consistent."""
    return build_idf(config.prepare(tokenize(text)) for text in narrations)
