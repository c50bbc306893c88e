"""Rule-based verb/noun/noun-chunk extraction and set-overlap scoring.

Tagging is lexicon-driven: a token's Porter stem is looked up in the verb,
noun, determiner, and adjective lists in that order, then an ordered list of
suffix rules is tried on the raw token as a fallback. A noun chunk is a
maximal contiguous run matching (determiner? adjective* noun+) and is
emitted as the space-joined stemmed run.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Literal

from .metrics import TokenSeq
from .porter import stem

TermKind = Literal["verb", "noun", "noun_chunk"]

_TAGS = ("verb", "noun", "det", "adj")
_SECTIONS = ("verbs", "nouns", "determiners", "adjectives", "suffix_rules")


class LexiconError(ValueError):
    """Raised for malformed lexicon files."""


@dataclass(frozen=True)
class TermLexicon:
    """Stemmed word lists plus ordered suffix fallbacks for POS tagging."""

    verbs: frozenset[str]
    nouns: frozenset[str]
    determiners: frozenset[str]
    adjectives: frozenset[str]
    suffix_rules: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        overlap = self.verbs & self.nouns
        if overlap:
            raise LexiconError(f"verb/noun stems overlap: {sorted(overlap)}")
        for suffix, tag in self.suffix_rules:
            if not suffix or tag not in _TAGS:
                raise LexiconError(f"bad suffix rule {(suffix, tag)!r}")

    def tag(self, token: str) -> str:
        """One of verb/noun/det/adj/other for a lowercase token."""
        s = stem(token)
        for tag, words in (
            ("verb", self.verbs),
            ("noun", self.nouns),
            ("det", self.determiners),
            ("adj", self.adjectives),
        ):
            if s in words:
                return tag
        for suffix, tag in self.suffix_rules:
            if len(token) > len(suffix) and token.endswith(suffix):
                return tag
        return "other"


def parse_lexicon(text: str) -> TermLexicon:
    """Parse the sectioned lexicon format.

    Sections are headed "[verbs]", "[nouns]", "[determiners]",
    "[adjectives]", "[suffix_rules]"; one entry per line; blank lines and
    "#" comments ignored. Suffix rule lines are "suffix<TAB>tag". Word
    entries are stemmed on load; a noun whose stem collides with a verb
    stem is dropped because the verb list is consulted first.
    """
    sections: dict[str, list[str]] = {name: [] for name in _SECTIONS}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name not in sections:
                raise LexiconError(f"line {lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise LexiconError(f"line {lineno}: entry before any section")
        sections[current].append(line)

    verbs = frozenset(stem(w.lower()) for w in sections["verbs"])
    nouns = frozenset(
        s
        for w in sections["nouns"]
        if (s := stem(w.lower())) not in verbs
    )
    rules = []
    for entry in sections["suffix_rules"]:
        if "\t" not in entry:
            raise LexiconError(f"suffix rule {entry!r} missing tab separator")
        suffix, tag = entry.split("\t", 1)
        rules.append((suffix.strip(), tag.strip()))
    return TermLexicon(
        verbs=verbs,
        nouns=nouns,
        determiners=frozenset(stem(w.lower()) for w in sections["determiners"]),
        adjectives=frozenset(stem(w.lower()) for w in sections["adjectives"]),
        suffix_rules=tuple(rules),
    )


def load_lexicon(path: str) -> TermLexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh.read())


def default_lexicon() -> TermLexicon:
    data = resources.files("bestview.textmetrics").joinpath(
        "data/default_lexicon.txt"
    )
    return parse_lexicon(data.read_text(encoding="utf-8"))


def extract_terms(
    tokens: TokenSeq, kind: TermKind, lexicon: TermLexicon
) -> set[str]:
    """Verb or noun stems, or space-joined stemmed noun chunks."""
    tags = [lexicon.tag(t) for t in tokens]
    stems = [stem(t) for t in tokens]
    if kind in ("verb", "noun"):
        return {s for s, tag in zip(stems, tags) if tag == kind}
    if kind != "noun_chunk":
        raise ValueError(f"unknown term kind {kind!r}")

    chunks: set[str] = set()
    i = 0
    n = len(tags)
    while i < n:
        j = i
        if j < n and tags[j] == "det":
            j += 1
        while j < n and tags[j] == "adj":
            j += 1
        start_nouns = j
        while j < n and tags[j] == "noun":
            j += 1
        if j > start_nouns:
            chunks.add(" ".join(stems[i:j]))
            i = j
        else:
            i += 1
    return chunks


def term_iou(a: set[str], b: set[str]) -> float:
    """Jaccard overlap; two empty sets count as identical (1.0)."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)
