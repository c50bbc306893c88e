"""HTTP API for the pairwise preference study.

GET  /api/health                       -> {"status": "ok"}
GET  /api/session/{id}/next?judge=jid  -> pair descriptor | {"done": true}
POST /api/judgment                     -> {"recorded": true, ...}
GET  /api/session/{id}/tally?policy=a  -> {"win", "loss", "tie", "p", ...}

plus an optional static /media route for the referenced view files.
Responses never contain ground-truth narration text.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .store import DuplicateJudgment, JudgmentStore, StudyError, UnknownSession


class JudgmentIn(BaseModel):
    session_id: str
    judge_id: str
    pair_index: int
    verdict: str


def create_app(store: JudgmentStore, media_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="pairwise view preference study")

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/session/{session_id}/next")
    def next_pair(session_id: str, judge: str = Query(min_length=1)) -> dict:
        try:
            return store.next_pair(session_id, judge)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/api/judgment")
    def submit(body: JudgmentIn) -> dict:
        try:
            return store.submit_judgment(
                session_id=body.session_id,
                judge_id=body.judge_id,
                pair_index=body.pair_index,
                verdict=body.verdict,
            )
        except DuplicateJudgment as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except StudyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/api/session/{session_id}/tally")
    def tally(session_id: str, policy: str = "a") -> dict:
        try:
            return store.tally(session_id, policy)
        except UnknownSession as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except StudyError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    if media_root is not None:
        app.mount("/media", StaticFiles(directory=str(media_root)), name="media")
    return app
