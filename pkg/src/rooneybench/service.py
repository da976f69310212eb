"""Round-based experiment service: session lifecycle, tile generation,
constraint enforcement, reveal-and-score, and an append-only event log.

Latent values never leave the server before the round's selection is
submitted. Tile values are a pure function of (service seed, session
creation order, round index), so the log plus the seed reconstructs every
session exactly.
"""
from __future__ import annotations

import json
import math
import os
import secrets
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import rng as rngmod

__all__ = [
    "ExperimentParams",
    "ServiceError",
    "SessionStore",
    "create_app",
    "replay_log",
    "DEMO_TILES",
    "DEMO_TOP3_IDS",
]


@dataclass(frozen=True)
class ExperimentParams:
    """Deployment parameters; defaults match the iterated-selection study."""

    n: int = 100
    k: int = 10
    rho: float = 0.5
    total_rounds: int = 25
    ell: int = 1  # constraint applied to the rooney condition
    latent_lo: float = 0.0
    latent_hi: float = 100.0
    noise_scale: float = 3.0
    bias: float = 2.0 / 3.0
    points_per_dollar: int = 15000

    @property
    def n_blue(self) -> int:
        return int(math.floor(self.rho * self.n + 0.5))

    @property
    def n_red(self) -> int:
        return self.n - self.n_blue


class ServiceError(Exception):
    """API-level error with a machine-readable kind."""

    STATUS = {
        "count": 400,
        "constraint": 400,
        "duplicate": 400,
        "conflict": 409,
        "not-found": 404,
        "gone": 410,
    }

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind
        self.message = message

    @property
    def status_code(self) -> int:
        return self.STATUS.get(self.kind, 400)


@dataclass
class Tile:
    id: int
    color: str  # "blue" | "red"
    latent: int
    observed: int


@dataclass
class RoundState:
    index: int  # 1-based
    tiles: List[Tile]
    selected_ids: Optional[List[int]] = None
    round_score: int = 0


@dataclass
class Session:
    session_id: str
    session_index: int
    condition: str  # "rooney" | "control"
    ell: int
    params: ExperimentParams
    created_at: float
    rounds: List[RoundState] = field(default_factory=list)
    current_round: int = 1
    cumulative_points: int = 0
    completed: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _generate_round_tiles(
    service_seed: int, session_index: int, round_index: int, params: ExperimentParams
) -> List[Tile]:
    """Deterministic tiles for one round; blue observations carry the bias."""
    rng = rngmod.substream(service_seed, rngmod.LANE_SERVICE, session_index, round_index)
    n_blue, n_red = params.n_blue, params.n_red
    latent = rng.uniform(params.latent_lo, params.latent_hi, params.n)
    centers = np.concatenate([params.bias * latent[:n_blue], latent[n_blue:]])
    observed = rng.normal(centers, params.noise_scale)
    tiles = []
    for i in range(params.n):
        tiles.append(Tile(
            id=i,
            color="blue" if i < n_blue else "red",
            latent=int(round(float(latent[i]))),
            observed=max(0, int(round(float(observed[i])))),
        ))
    return tiles


# Fixed all-red demonstration: observed values are small distortions of the
# latent values, and the top-3 latent tiles sit at observed ranks 1, 2, 4.
DEMO_TILES = [
    {"id": 0, "color": "red", "observed": 93, "latent": 95},
    {"id": 1, "color": "red", "observed": 89, "latent": 91},
    {"id": 2, "color": "red", "observed": 84, "latent": 78},
    {"id": 3, "color": "red", "observed": 81, "latent": 86},
    {"id": 4, "color": "red", "observed": 66, "latent": 64},
    {"id": 5, "color": "red", "observed": 52, "latent": 55},
    {"id": 6, "color": "red", "observed": 38, "latent": 36},
    {"id": 7, "color": "red", "observed": 21, "latent": 24},
]
DEMO_TOP3_IDS = frozenset(
    t["id"] for t in sorted(DEMO_TILES, key=lambda t: -t["latent"])[:3]
)


class SessionStore:
    """In-memory session state backed by an append-only JSONL event log."""

    def __init__(
        self,
        service_seed: int = 0,
        params: ExperimentParams = ExperimentParams(),
        log_path: Optional[str] = None,
    ):
        self.service_seed = service_seed
        self.params = params
        self.log_path = log_path
        self._sessions: Dict[str, Session] = {}
        self._store_lock = threading.Lock()
        self._log_lock = threading.Lock()
        self._assignment_rng = rngmod.substream(service_seed, rngmod.LANE_SERVICE)
        self._next_index = 0

    # -- logging ------------------------------------------------------------

    def _append_log(self, record: dict) -> None:
        if self.log_path is None:
            return
        line = json.dumps(record, sort_keys=True)
        with self._log_lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    # -- session lifecycle ----------------------------------------------------

    def create_session(self, condition: str = "random") -> dict:
        if condition not in ("random", "rooney", "control"):
            raise ServiceError("count", f"unknown condition {condition!r}")
        with self._store_lock:
            session_index = self._next_index
            self._next_index += 1
            if condition == "random":
                condition = "rooney" if self._assignment_rng.random() < 0.5 else "control"
            session = Session(
                session_id=secrets.token_hex(16),
                session_index=session_index,
                condition=condition,
                ell=self.params.ell if condition == "rooney" else 0,
                params=self.params,
                created_at=time.time(),
            )
            session.rounds.append(RoundState(
                index=1,
                tiles=_generate_round_tiles(
                    self.service_seed, session_index, 1, self.params
                ),
            ))
            self._sessions[session.session_id] = session
        self._append_log({
            "type": "session-created",
            "session_id": session.session_id,
            "session_index": session.session_index,
            "condition": session.condition,
            "ell": session.ell,
            "created_at": session.created_at,
        })
        return {
            "session_id": session.session_id,
            "condition": session.condition,
            "total_rounds": self.params.total_rounds,
            "k": self.params.k,
            "ell": session.ell,
        }

    def _get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise ServiceError("not-found", "unknown session")
        return session

    def _round_state(self, session: Session, index: int) -> RoundState:
        while len(session.rounds) < index:
            session.rounds.append(RoundState(
                index=len(session.rounds) + 1,
                tiles=_generate_round_tiles(
                    self.service_seed,
                    session.session_index,
                    len(session.rounds) + 1,
                    self.params,
                ),
            ))
        return session.rounds[index - 1]

    def get_current_round(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.completed:
                raise ServiceError("gone", "session is completed")
            state = self._round_state(session, session.current_round)
            tiles = sorted(state.tiles, key=lambda t: (-t.observed, t.id))
            return {
                "round_index": state.index,
                "total_rounds": session.params.total_rounds,
                "k": session.params.k,
                "ell": session.ell,
                "condition": session.condition,
                "tiles": [
                    {"id": t.id, "color": t.color, "observed": t.observed}
                    for t in tiles
                ],
                "cumulative_points": session.cumulative_points,
            }

    def submit_selection(
        self,
        session_id: str,
        tile_ids: List[int],
        round_index: Optional[int] = None,
    ) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.completed:
                raise ServiceError("gone", "session is completed")
            if round_index is not None and round_index != session.current_round:
                raise ServiceError(
                    "conflict",
                    f"round {round_index} is not open (current is {session.current_round})",
                )
            if len(set(tile_ids)) != len(tile_ids):
                raise ServiceError("duplicate", "tile ids must be distinct")
            if len(tile_ids) != session.params.k:
                raise ServiceError(
                    "count", f"exactly {session.params.k} tile ids required"
                )
            state = self._round_state(session, session.current_round)
            by_id = {t.id: t for t in state.tiles}
            unknown = [tid for tid in tile_ids if tid not in by_id]
            if unknown:
                raise ServiceError("count", f"unknown tile ids: {unknown}")
            picked = [by_id[tid] for tid in tile_ids]
            num_blue = sum(1 for t in picked if t.color == "blue")
            if num_blue < session.ell:
                raise ServiceError(
                    "constraint",
                    f"at least {session.ell} blue tile(s) required",
                )

            round_score = sum(t.latent for t in picked)
            submitted_round = session.current_round
            cumulative = session.cumulative_points + round_score
            self._append_log({
                "type": "round-submitted",
                "session_id": session.session_id,
                "round_index": submitted_round,
                "tile_ids": sorted(tile_ids),
                "round_score": round_score,
                "cumulative_points": cumulative,
            })
            state.selected_ids = list(tile_ids)
            state.round_score = round_score
            session.cumulative_points = cumulative
            if submitted_round >= session.params.total_rounds:
                session.completed = True
            else:
                session.current_round = submitted_round + 1
                self._round_state(session, session.current_round)

            payload = {
                "round_index": submitted_round,
                "revealed": [
                    {"id": t.id, "color": t.color, "observed": t.observed,
                     "latent": t.latent}
                    for t in sorted(picked, key=lambda t: (-t.observed, t.id))
                ],
                "round_score": round_score,
                "cumulative_points": session.cumulative_points,
                "bonus_dollars": session.cumulative_points / session.params.points_per_dollar,
                "completed": session.completed,
            }
            if not session.completed:
                payload["next_round_index"] = session.current_round
            return payload

    def get_summary(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if not session.completed:
                raise ServiceError("conflict", "session is not completed")
            return {
                "session_id": session.session_id,
                "condition": session.condition,
                "ell": session.ell,
                "k": session.params.k,
                "total_rounds": session.params.total_rounds,
                "params": {
                    "n": session.params.n,
                    "k": session.params.k,
                    "rho": session.params.rho,
                    "bias": session.params.bias,
                    "noise_scale": session.params.noise_scale,
                    "points_per_dollar": session.params.points_per_dollar,
                },
                "cumulative_points": session.cumulative_points,
                "bonus_dollars": session.cumulative_points / session.params.points_per_dollar,
                "rounds": [
                    {
                        "round_index": r.index,
                        "tiles": [asdict(t) for t in r.tiles],
                        "selected_ids": list(r.selected_ids),
                        "round_score": r.round_score,
                    }
                    for r in session.rounds
                ],
            }

    # -- demo -----------------------------------------------------------------

    @staticmethod
    def get_demo() -> dict:
        return {
            "tiles": [
                {"id": t["id"], "color": t["color"], "observed": t["observed"],
                 "latent": t["latent"]}
                for t in DEMO_TILES
            ],
            "select_count": 3,
        }

    @staticmethod
    def check_demo(tile_ids: List[int]) -> dict:
        passed = frozenset(tile_ids) == DEMO_TOP3_IDS
        return {"passed": passed}


def replay_log(
    log_path: str,
    service_seed: int,
    params: ExperimentParams = ExperimentParams(),
) -> Dict[str, dict]:
    """Rebuild every session's final state from the event log alone."""
    sessions: Dict[str, dict] = {}
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if record["type"] == "session-created":
                sessions[record["session_id"]] = {
                    "session_index": record["session_index"],
                    "condition": record["condition"],
                    "ell": record["ell"],
                    "rounds": {},
                    "cumulative_points": 0,
                }
            elif record["type"] == "round-submitted":
                state = sessions[record["session_id"]]
                tiles = _generate_round_tiles(
                    service_seed, state["session_index"], record["round_index"], params
                )
                by_id = {t.id: t for t in tiles}
                score = sum(by_id[tid].latent for tid in record["tile_ids"])
                if score != record["round_score"]:
                    raise ValueError(
                        f"log corrupt: recomputed score {score} != "
                        f"logged {record['round_score']}"
                    )
                state["rounds"][record["round_index"]] = record["tile_ids"]
                state["cumulative_points"] += score
    return sessions


# ---------------------------------------------------------------------------
# HTTP surface


def create_app(store: Optional[SessionStore] = None, static_dir: Optional[str] = None):
    """FastAPI application bound to a session store."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    if store is None:
        store = SessionStore()
    app = FastAPI(title="iterated-selection experiment service")
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"kind": exc.kind, "message": exc.message},
        )

    @app.post("/api/sessions")
    async def create_session(body: Optional[dict] = None):
        condition = (body or {}).get("condition", "random")
        return store.create_session(condition)

    @app.get("/api/sessions/{session_id}/round")
    async def get_round(session_id: str):
        return store.get_current_round(session_id)

    @app.post("/api/sessions/{session_id}/selection")
    async def submit(session_id: str, body: dict):
        tile_ids = body.get("tile_ids")
        if not isinstance(tile_ids, list) or not all(
            isinstance(t, int) and not isinstance(t, bool) for t in tile_ids
        ):
            raise ServiceError("count", "body must carry tile_ids: [int]")
        return store.submit_selection(
            session_id, tile_ids, round_index=body.get("round_index")
        )

    @app.get("/api/sessions/{session_id}/summary")
    async def summary(session_id: str):
        return store.get_summary(session_id)

    @app.get("/api/demo")
    async def demo():
        return store.get_demo()

    @app.post("/api/demo/check")
    async def demo_check(body: dict):
        tile_ids = body.get("tile_ids", [])
        if not isinstance(tile_ids, list):
            raise ServiceError("count", "body must carry tile_ids: [int]")
        return store.check_demo(tile_ids)

    if static_dir is not None and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
