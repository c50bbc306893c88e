"""Session and judgment storage for the pairwise preference study.

Sessions are immutable once created; judgments go to an append-only JSON
lines log, one file per session, which is the source of truth: every
tally can be recomputed from the raw log. Within each pair, the left and
right slots are assigned by a deterministic hash of (seed, judge,
pair_index), so a judge sees a stable but unpredictable order across
restarts. Descriptors sent to judges never include narration text.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from scipy.stats import binomtest

VERDICTS = ("first", "second", "both")


class StudyError(ValueError):
    """Raised for malformed specs or invalid judgment submissions."""


class DuplicateJudgment(StudyError):
    """The (judge, pair) was already judged; the log is unchanged."""


class UnknownSession(StudyError):
    pass


@dataclass(frozen=True)
class StudyPair:
    """One canonical comparison: policy 'a' view vs policy 'b' view."""

    clip_id: str
    view_a: int
    view_b: int
    media_uri_a: str
    media_uri_b: str

    def __post_init__(self) -> None:
        if self.view_a == self.view_b:
            raise StudyError(
                f"clip {self.clip_id}: pair compares a view with itself"
            )


@dataclass(frozen=True)
class StudySession:
    session_id: str
    seed: int
    pairs: tuple[StudyPair, ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise StudyError("session has no pairs")


def swap_views(seed: int, judge_id: str, pair_index: int) -> bool:
    """True when the pair is presented with the 'b' view on the left."""
    key = f"{seed}:{judge_id}:{pair_index}".encode()
    return bool(hashlib.sha256(key).digest()[0] & 1)


def parse_pairs_spec(text: str) -> tuple[StudyPair, ...]:
    """JSON lines, one pair per line: clip_id, view_a, view_b,
    media_uri_a, media_uri_b."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StudyError(f"pairs spec line {lineno}: {exc}") from exc
        try:
            pairs.append(
                StudyPair(
                    clip_id=str(obj["clip_id"]),
                    view_a=int(obj["view_a"]),
                    view_b=int(obj["view_b"]),
                    media_uri_a=str(obj["media_uri_a"]),
                    media_uri_b=str(obj["media_uri_b"]),
                )
            )
        except KeyError as exc:
            raise StudyError(f"pairs spec line {lineno}: missing {exc}") from exc
    if not pairs:
        raise StudyError("pairs spec contains no pairs")
    return tuple(pairs)


def _canonical_outcome(verdict: str, swapped: bool) -> str:
    """Map a left/right verdict back to canonical a/b/tie semantics."""
    if verdict == "both":
        return "tie"
    picked_left = verdict == "first"
    picked_a = picked_left != swapped
    return "a" if picked_a else "b"


class JudgmentStore:
    """Disk-backed session registry plus per-session append-only logs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.sessions_dir = self.root / "sessions"
        self.logs_dir = self.root / "logs"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, StudySession] = {}
        self._judged: dict[str, set[tuple[str, int]]] = {}
        for path in sorted(self.sessions_dir.glob("*.json")):
            self._load_session(path)

    def _load_session(self, path: Path) -> StudySession:
        obj = json.loads(path.read_text(encoding="utf-8"))
        session = StudySession(
            session_id=obj["session_id"],
            seed=int(obj["seed"]),
            pairs=tuple(
                StudyPair(
                    clip_id=p["clip_id"],
                    view_a=int(p["view_a"]),
                    view_b=int(p["view_b"]),
                    media_uri_a=p["media_uri_a"],
                    media_uri_b=p["media_uri_b"],
                )
                for p in obj["pairs"]
            ),
        )
        self._sessions[session.session_id] = session
        judged = set()
        for record in self._read_log(session.session_id):
            judged.add((record["judge_id"], int(record["pair_index"])))
        self._judged[session.session_id] = judged
        return session

    def _log_path(self, session_id: str) -> Path:
        return self.logs_dir / f"{session_id}.jsonl"

    def _read_log(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            return []
        records = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(json.loads(line))
        return records

    def create_session(self, pairs_spec_path: str | Path, seed: int) -> StudySession:
        """Register a session; the id is a hash of the spec bytes and seed,
        so recreating from the same inputs is a no-op."""
        spec_bytes = Path(pairs_spec_path).read_bytes()
        pairs = parse_pairs_spec(spec_bytes.decode("utf-8"))
        digest = hashlib.sha256(spec_bytes + f":{seed}".encode()).hexdigest()
        session_id = digest[:12]
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
            session = StudySession(session_id=session_id, seed=seed, pairs=pairs)
            path = self.sessions_dir / f"{session_id}.json"
            path.write_text(
                json.dumps(
                    {
                        "session_id": session_id,
                        "seed": seed,
                        "pairs": [
                            {
                                "clip_id": p.clip_id,
                                "view_a": p.view_a,
                                "view_b": p.view_b,
                                "media_uri_a": p.media_uri_a,
                                "media_uri_b": p.media_uri_b,
                            }
                            for p in pairs
                        ],
                    }
                )
                + "\n",
                encoding="utf-8",
            )
            self._sessions[session_id] = session
            self._judged.setdefault(session_id, set())
            return session

    def session(self, session_id: str) -> StudySession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"unknown session {session_id!r}") from None

    def _next_index(self, session: StudySession, judge_id: str) -> int | None:
        judged = self._judged.get(session.session_id, set())
        for index in range(len(session.pairs)):
            if (judge_id, index) not in judged:
                return index
        return None

    def next_pair(self, session_id: str, judge_id: str) -> dict:
        """Descriptor for the judge's first unjudged pair, or done."""
        session = self.session(session_id)
        with self._lock:
            index = self._next_index(session, judge_id)
        if index is None:
            return {"done": True}
        pair = session.pairs[index]
        swapped = swap_views(session.seed, judge_id, index)
        left, right = (
            (pair.media_uri_b, pair.media_uri_a)
            if swapped
            else (pair.media_uri_a, pair.media_uri_b)
        )
        return {
            "pair_index": index,
            "left_uri": left,
            "right_uri": right,
            "progress": {"done": index, "total": len(session.pairs)},
        }

    def submit_judgment(
        self,
        session_id: str,
        judge_id: str,
        pair_index: int,
        verdict: str,
        timestamp: float | None = None,
    ) -> dict:
        """Validate, map the verdict through the presentation swap, and
        append to the log. The duplicate check and the append happen under
        one lock."""
        session = self.session(session_id)
        if verdict not in VERDICTS:
            raise StudyError(f"invalid verdict {verdict!r}")
        if not 0 <= pair_index < len(session.pairs):
            raise StudyError(f"unknown pair index {pair_index}")
        if not judge_id:
            raise StudyError("judge_id must be non-empty")
        with self._lock:
            judged = self._judged.setdefault(session_id, set())
            if (judge_id, pair_index) in judged:
                raise DuplicateJudgment(
                    f"judge {judge_id!r} already judged pair {pair_index}"
                )
            expected = self._next_index(session, judge_id)
            if pair_index != expected:
                raise StudyError(
                    f"pair {pair_index} is not currently served to "
                    f"{judge_id!r} (expected {expected})"
                )
            swapped = swap_views(session.seed, judge_id, pair_index)
            record = {
                "session_id": session_id,
                "judge_id": judge_id,
                "pair_index": pair_index,
                "verdict": verdict,
                "outcome": _canonical_outcome(verdict, swapped),
                "timestamp": time.time() if timestamp is None else timestamp,
            }
            with self._log_path(session_id).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")
                fh.flush()
            judged.add((judge_id, pair_index))
        return {"recorded": True, "pair_index": pair_index}

    def tally(self, session_id: str, policy_of_interest: str = "a") -> dict:
        """Win/loss/tie percentages over all judgments plus a two-sided
        sign test on wins vs losses (ties excluded)."""
        session = self.session(session_id)
        if policy_of_interest not in ("a", "b"):
            raise StudyError(f"policy_of_interest must be 'a' or 'b'")
        records = self._read_log(session.session_id)
        if not records:
            raise StudyError(f"session {session_id}: no judgments yet")
        return tally_records(records, policy_of_interest)

    def log_records(self, session_id: str) -> list[dict]:
        self.session(session_id)
        return self._read_log(session_id)


def tally_records(records: list[dict], policy_of_interest: str = "a") -> dict:
    """Pure tally over raw log records, used for both live and replayed
    tallies."""
    wins = losses = ties = 0
    for record in records:
        outcome = record["outcome"]
        if outcome == "tie":
            ties += 1
        elif outcome == policy_of_interest:
            wins += 1
        else:
            losses += 1
    total = wins + losses + ties
    if wins + losses:
        p = float(binomtest(wins, wins + losses, 0.5).pvalue)
    else:
        p = 1.0
    return {
        "win": round(100.0 * wins / total, 1),
        "loss": round(100.0 * losses / total, 1),
        "tie": round(100.0 * ties / total, 1),
        "p": p,
        "judgments": total,
    }
