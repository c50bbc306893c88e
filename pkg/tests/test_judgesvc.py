"""Pairwise preference study: sessions, judgment log, tally, HTTP API."""

from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient
from scipy.stats import binomtest

from bestview.judgesvc import (
    DuplicateJudgment,
    JudgmentStore,
    StudyError,
    StudyPair,
    StudySession,
    UnknownSession,
    create_app,
    parse_pairs_spec,
    swap_views,
    tally_records,
)


def write_spec(tmp_path, n_pairs=3, name="pairs.jsonl"):
    lines = [
        json.dumps(
            {
                "clip_id": f"clip{i}",
                "view_a": 0,
                "view_b": 1,
                "media_uri_a": f"/media/clip{i}_v0.mp4",
                "media_uri_b": f"/media/clip{i}_v1.mp4",
            }
        )
        for i in range(n_pairs)
    ]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def verdict_for(outcome: str, seed: int, judge: str, index: int) -> str:
    """Left/right verdict that lands on the requested canonical outcome."""
    if outcome == "tie":
        return "both"
    swapped = swap_views(seed, judge, index)
    if outcome == "a":
        return "second" if swapped else "first"
    return "first" if swapped else "second"


def run_session(tmp_path, outcomes, seed=0, judge="j1"):
    store = JudgmentStore(tmp_path / "study")
    spec = write_spec(tmp_path, n_pairs=len(outcomes))
    session = store.create_session(spec, seed=seed)
    for i, outcome in enumerate(outcomes):
        store.submit_judgment(
            session.session_id, judge, i, verdict_for(outcome, seed, judge, i)
        )
    return store, session


class TestParsePairsSpec:
    def test_parses_and_skips_blank_lines(self, tmp_path):
        path = write_spec(tmp_path, 2)
        text = path.read_text() + "\n\n"
        pairs = parse_pairs_spec(text)
        assert len(pairs) == 2
        assert pairs[0].clip_id == "clip0"
        assert pairs[1].media_uri_b.endswith("clip1_v1.mp4")

    def test_bad_json_names_line(self):
        with pytest.raises(StudyError, match="line 2"):
            parse_pairs_spec('{"clip_id": "c", "view_a": 0, "view_b": 1, '
                             '"media_uri_a": "a", "media_uri_b": "b"}\n{oops\n')

    def test_missing_field_names_line(self):
        with pytest.raises(StudyError, match="line 1.*view_b"):
            parse_pairs_spec('{"clip_id": "c", "view_a": 0}\n')

    def test_empty_spec_rejected(self):
        with pytest.raises(StudyError, match="no pairs"):
            parse_pairs_spec("\n\n")

    def test_self_comparison_rejected(self):
        with pytest.raises(StudyError, match="itself"):
            StudyPair(
                clip_id="c", view_a=1, view_b=1, media_uri_a="a", media_uri_b="b"
            )

    def test_session_needs_pairs(self):
        with pytest.raises(StudyError, match="no pairs"):
            StudySession(session_id="x", seed=0, pairs=())


class TestSwapViews:
    def test_deterministic(self):
        assert swap_views(3, "judge", 5) == swap_views(3, "judge", 5)

    def test_varies_with_inputs(self):
        values = {
            swap_views(seed, judge, index)
            for seed in range(4)
            for judge in ("a", "b")
            for index in range(6)
        }
        assert values == {True, False}


class TestCreateSession:
    def test_id_is_short_hash(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=1)
        assert len(session.session_id) == 12
        assert all(c in "0123456789abcdef" for c in session.session_id)
        assert len(session.pairs) == 3

    def test_idempotent_for_same_inputs(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        spec = write_spec(tmp_path)
        a = store.create_session(spec, seed=1)
        b = store.create_session(spec, seed=1)
        assert a.session_id == b.session_id
        assert len(list((tmp_path / "study" / "sessions").glob("*.json"))) == 1

    def test_seed_changes_id(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        spec = write_spec(tmp_path)
        assert (
            store.create_session(spec, seed=1).session_id
            != store.create_session(spec, seed=2).session_id
        )

    def test_unknown_session_lookup(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        with pytest.raises(UnknownSession):
            store.session("nope")


class TestNextPair:
    def test_serves_pairs_in_order(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        sid = session.session_id
        first = store.next_pair(sid, "j1")
        assert first["pair_index"] == 0
        assert first["progress"] == {"done": 0, "total": 3}
        store.submit_judgment(sid, "j1", 0, "both")
        second = store.next_pair(sid, "j1")
        assert second["pair_index"] == 1
        assert second["progress"] == {"done": 1, "total": 3}

    def test_left_right_follow_swap(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        desc = store.next_pair(session.session_id, "j1")
        pair = session.pairs[0]
        if swap_views(0, "j1", 0):
            assert (desc["left_uri"], desc["right_uri"]) == (
                pair.media_uri_b, pair.media_uri_a
            )
        else:
            assert (desc["left_uri"], desc["right_uri"]) == (
                pair.media_uri_a, pair.media_uri_b
            )

    def test_done_after_all_pairs(self, tmp_path):
        store, session = run_session(tmp_path, ["a", "b", "tie"])
        assert store.next_pair(session.session_id, "j1") == {"done": True}

    def test_judges_progress_independently(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        sid = session.session_id
        store.submit_judgment(sid, "j1", 0, "both")
        store.submit_judgment(sid, "j1", 1, "both")
        assert store.next_pair(sid, "j1")["pair_index"] == 2
        assert store.next_pair(sid, "j2")["pair_index"] == 0


class TestSubmitJudgment:
    def setup_store(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        return store, session.session_id

    def test_invalid_verdict(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        with pytest.raises(StudyError, match="invalid verdict"):
            store.submit_judgment(sid, "j1", 0, "left")

    def test_pair_index_out_of_range(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        with pytest.raises(StudyError, match="unknown pair index"):
            store.submit_judgment(sid, "j1", 7, "both")

    def test_empty_judge_id(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        with pytest.raises(StudyError, match="judge_id"):
            store.submit_judgment(sid, "", 0, "both")

    def test_out_of_order_rejected(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        with pytest.raises(StudyError, match="not currently served"):
            store.submit_judgment(sid, "j1", 1, "both")
        # nothing was logged
        assert store.log_records(sid) == []

    def test_duplicate_rejected_and_log_unchanged(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        store.submit_judgment(sid, "j1", 0, "first")
        store.submit_judgment(sid, "j1", 1, "both")
        before = store.log_records(sid)
        with pytest.raises(DuplicateJudgment):
            store.submit_judgment(sid, "j1", 0, "second")
        assert store.log_records(sid) == before
        # the judge still advances past the duplicate
        assert store.next_pair(sid, "j1")["pair_index"] == 2

    def test_outcome_mapping_through_swap(self, tmp_path):
        outcomes = ["a", "b", "tie"]
        store, session = run_session(tmp_path, outcomes, seed=5, judge="jx")
        got = [r["outcome"] for r in store.log_records(session.session_id)]
        assert got == outcomes

    def test_timestamp_override(self, tmp_path):
        store, sid = self.setup_store(tmp_path)
        store.submit_judgment(sid, "j1", 0, "both", timestamp=123.5)
        assert store.log_records(sid)[0]["timestamp"] == 123.5


class TestRestartRecovery:
    def test_new_store_resumes_from_log(self, tmp_path):
        store, session = run_session(tmp_path, ["a", "b"], judge="j1")
        sid = session.session_id
        reopened = JudgmentStore(tmp_path / "study")
        assert reopened.session(sid).pairs == session.pairs
        assert reopened.next_pair(sid, "j1") == {"done": True}
        assert reopened.tally(sid) == store.tally(sid)

    def test_partial_progress_survives(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        store.submit_judgment(session.session_id, "j1", 0, "both")
        reopened = JudgmentStore(tmp_path / "study")
        nxt = reopened.next_pair(session.session_id, "j1")
        assert nxt["pair_index"] == 1
        with pytest.raises(DuplicateJudgment):
            reopened.submit_judgment(session.session_id, "j1", 0, "both")


class TestTally:
    def test_eight_one_one_split(self, tmp_path):
        outcomes = ["a"] * 8 + ["b"] + ["tie"]
        store, session = run_session(tmp_path, outcomes)
        tally = store.tally(session.session_id)
        assert tally["win"] == 80.0
        assert tally["loss"] == 10.0
        assert tally["tie"] == 10.0
        assert tally["judgments"] == 10
        assert tally["p"] == pytest.approx(0.0390625, abs=1e-12)
        assert tally["p"] == float(binomtest(8, 9, 0.5).pvalue)

    def test_policy_b_swaps_wins_and_losses(self, tmp_path):
        outcomes = ["a"] * 8 + ["b"] + ["tie"]
        store, session = run_session(tmp_path, outcomes)
        tally = store.tally(session.session_id, policy_of_interest="b")
        assert tally["win"] == 10.0
        assert tally["loss"] == 80.0
        assert tally["p"] == pytest.approx(0.0390625, abs=1e-12)

    def test_all_ties_give_p_one(self, tmp_path):
        store, session = run_session(tmp_path, ["tie"] * 4)
        tally = store.tally(session.session_id)
        assert tally["tie"] == 100.0
        assert tally["p"] == 1.0

    def test_no_judgments_rejected(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        with pytest.raises(StudyError, match="no judgments"):
            store.tally(session.session_id)

    def test_bad_policy_rejected(self, tmp_path):
        store, session = run_session(tmp_path, ["a"])
        with pytest.raises(StudyError, match="'a' or 'b'"):
            store.tally(session.session_id, policy_of_interest="c")

    def test_replay_from_log_matches_live(self, tmp_path):
        outcomes = ["a", "a", "b", "tie", "a"]
        store, session = run_session(tmp_path, outcomes)
        live = store.tally(session.session_id)
        replayed = tally_records(store.log_records(session.session_id))
        assert replayed == live

    def test_tally_records_is_pure(self):
        records = [{"outcome": "a"}, {"outcome": "a"}, {"outcome": "b"}]
        out = tally_records(records)
        assert out["win"] == pytest.approx(66.7)
        assert out["loss"] == pytest.approx(33.3)
        assert out["p"] == 1.0
        assert out["judgments"] == 3
        assert records == [{"outcome": "a"}, {"outcome": "a"}, {"outcome": "b"}]


class TestHttpApi:
    @pytest.fixture
    def client_session(self, tmp_path):
        store = JudgmentStore(tmp_path / "study")
        session = store.create_session(write_spec(tmp_path), seed=0)
        media = tmp_path / "media"
        media.mkdir()
        (media / "clip.mp4").write_bytes(b"fake")
        client = TestClient(create_app(store, media_root=media))
        return client, session

    def test_health(self, client_session):
        client, _ = client_session
        resp = client.get("/api/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_next_pair_descriptor(self, client_session):
        client, session = client_session
        resp = client.get(f"/api/session/{session.session_id}/next?judge=j1")
        assert resp.status_code == 200
        body = resp.json()
        assert body["pair_index"] == 0
        assert body["progress"] == {"done": 0, "total": 3}
        assert {body["left_uri"], body["right_uri"]} == {
            session.pairs[0].media_uri_a, session.pairs[0].media_uri_b
        }

    def test_descriptor_never_leaks_narration(self, client_session):
        client, session = client_session
        resp = client.get(f"/api/session/{session.session_id}/next?judge=j1")
        assert "narration" not in resp.text
        assert "caption" not in resp.text

    def test_judge_param_required(self, client_session):
        client, session = client_session
        resp = client.get(f"/api/session/{session.session_id}/next")
        assert resp.status_code == 422

    def test_unknown_session_is_404(self, client_session):
        client, _ = client_session
        assert client.get("/api/session/nope/next?judge=j1").status_code == 404
        assert client.get("/api/session/nope/tally").status_code == 404

    def test_full_judging_flow(self, client_session):
        client, session = client_session
        sid = session.session_id
        for i, outcome in enumerate(["a", "a", "b"]):
            verdict = verdict_for(outcome, 0, "j1", i)
            resp = client.post(
                "/api/judgment",
                json={
                    "session_id": sid,
                    "judge_id": "j1",
                    "pair_index": i,
                    "verdict": verdict,
                },
            )
            assert resp.status_code == 200
            assert resp.json()["recorded"] is True
        assert client.get(f"/api/session/{sid}/next?judge=j1").json() == {
            "done": True
        }
        tally = client.get(f"/api/session/{sid}/tally").json()
        assert tally["win"] == pytest.approx(66.7)
        assert tally["p"] == 1.0

    def test_duplicate_is_409(self, client_session):
        client, session = client_session
        body = {
            "session_id": session.session_id,
            "judge_id": "j1",
            "pair_index": 0,
            "verdict": "both",
        }
        assert client.post("/api/judgment", json=body).status_code == 200
        assert client.post("/api/judgment", json=body).status_code == 409

    def test_bad_verdict_is_400(self, client_session):
        client, session = client_session
        resp = client.post(
            "/api/judgment",
            json={
                "session_id": session.session_id,
                "judge_id": "j1",
                "pair_index": 0,
                "verdict": "left",
            },
        )
        assert resp.status_code == 400

    def test_out_of_order_is_400(self, client_session):
        client, session = client_session
        resp = client.post(
            "/api/judgment",
            json={
                "session_id": session.session_id,
                "judge_id": "j1",
                "pair_index": 2,
                "verdict": "both",
            },
        )
        assert resp.status_code == 400

    def test_tally_before_judgments_is_400(self, client_session):
        client, session = client_session
        resp = client.get(f"/api/session/{session.session_id}/tally")
        assert resp.status_code == 400

    def test_media_mount_serves_files(self, client_session):
        client, _ = client_session
        resp = client.get("/media/clip.mp4")
        assert resp.status_code == 200
        assert resp.content == b"fake"
