"""HTTP service hosting live closed-loop episodes.

Each session owns one executor runtime ticked by a background thread on a
paced clock (``rtf`` = real-time factor; 0 runs flat out). Observers pull
a server-push event stream (one JSON object per symbol-loop step) and can
inject hand perturbations that apply atomically between ticks.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .embedder import FrameClassifier
from .envsim.tasks import TASKS
from .errors import InvariantViolation
from .executor import CONTROL_HZ, ModelPolicy, OraclePolicy, Runtime
from .seqmodel import load_model

EVENT_POLL_S = 0.05


@dataclass
class Session:
    id: str
    task_id: str
    runtime: Runtime
    rtf: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    ready: threading.Condition = field(default_factory=threading.Condition)
    events: list[dict] = field(default_factory=list)
    status: str = "running"
    outcome: dict | None = None
    thread: threading.Thread | None = None
    stop_requested: bool = False

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "id": self.id,
                "task": self.task_id,
                "status": self.status,
                "tick": self.runtime.tick_no,
                "state": self.runtime.live_state().to_dict(),
                "queue": self.runtime.queue.snapshot(),
                "last_prediction": self.runtime.last_prediction,
                "mispredictions": self.runtime.mispredictions,
                "outcome": self.outcome,
            }


def _build_policy(task, policy_spec):
    if policy_spec == "oracle" or policy_spec is None:
        return OraclePolicy(task)
    if isinstance(policy_spec, dict) and "checkpoint" in policy_spec:
        try:
            model = load_model(policy_spec["checkpoint"])
            clf = FrameClassifier.load(policy_spec["classifier"])
        except (FileNotFoundError, KeyError, ValueError) as err:
            raise ValueError(f"cannot load policy: {err}") from err
        return ModelPolicy(model, clf)
    raise ValueError("policy must be 'oracle' or {checkpoint, classifier} paths")


class SessionManager:
    """Owns all live sessions; one ticking thread per running session."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    def create(self, task_id: str, policy_spec=None, seed: int = 0, rtf: float = 1.0, autostart: bool = True) -> Session:
        if task_id.lower() not in TASKS:
            raise ValueError(f"unknown task {task_id!r}; expected one of {sorted(TASKS)}")
        task = TASKS[task_id.lower()]
        policy = _build_policy(task, policy_spec)
        policy.reset()
        runtime = Runtime(task, policy, seed=seed, keep_trace=True)
        session = Session(id=uuid.uuid4().hex[:12], task_id=task.task_id, runtime=runtime, rtf=rtf)
        with self._registry_lock:
            self._sessions[session.id] = session
        if autostart:
            session.thread = threading.Thread(target=self._run, args=(session,), daemon=True)
            session.thread.start()
        return session

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(f"no session {session_id!r}")
        return session

    def step(self, session: Session, n_ticks: int) -> None:
        """Advance a non-autostarted session by n control ticks (tests)."""
        for _ in range(n_ticks):
            if session.runtime.finished:
                break
            self._tick_once(session)
        if session.runtime.finished and session.status == "running":
            self._finish(session)

    def _tick_once(self, session: Session) -> None:
        runtime = session.runtime
        with session.lock:
            before = len(runtime.trace)
            runtime.tick()
            fresh = runtime.trace[before:]
        if fresh:
            with session.ready:
                session.events.extend(fresh)
                session.ready.notify_all()

    def _finish(self, session: Session) -> None:
        with session.lock:
            outcome = session.runtime.outcome()
            session.status = "finished"
            session.outcome = {
                "verdict": outcome.verdict,
                "goal": outcome.goal,
                "mispredictions": outcome.mispredictions,
                "ticks_used": outcome.ticks_used,
                "reason": outcome.reason,
            }
        with session.ready:
            session.events.append({"event": "finished", "tick": session.runtime.tick_no, "outcome": session.outcome})
            session.ready.notify_all()

    def _run(self, session: Session) -> None:
        dt = 1.0 / CONTROL_HZ
        while not session.runtime.finished and not session.stop_requested:
            start = time.monotonic()
            self._tick_once(session)
            if session.rtf > 0:
                remaining = dt / session.rtf - (time.monotonic() - start)
                if remaining > 0:
                    time.sleep(remaining)
        self._finish(session)

    def perturb(self, session_id: str, mutation: dict) -> dict:
        session = self.get(session_id)
        if session.status != "running":
            raise ValueError("session already finished")
        with session.lock:
            session.runtime.perturb(mutation)
            state = session.runtime.live_state().to_dict()
        return state

    def stop_all(self) -> None:
        with self._registry_lock:
            sessions = list(self._sessions.values())
        for s in sessions:
            s.stop_requested = True
        for s in sessions:
            if s.thread is not None:
                s.thread.join(timeout=2.0)

    def event_stream(self, session_id: str):
        """Yield every event of the session from the beginning, then follow."""
        session = self.get(session_id)
        cursor = 0
        while True:
            with session.ready:
                while cursor >= len(session.events):
                    if session.status == "finished":
                        return
                    session.ready.wait(timeout=EVENT_POLL_S)
                batch = session.events[cursor:]
                cursor = len(session.events)
            for event in batch:
                yield event


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="symplan session service")
    app.state.manager = manager
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/sessions")
    def create_session(body: dict):
        try:
            session = manager.create(
                task_id=body.get("task", "abcdef"),
                policy_spec=body.get("policy", "oracle"),
                seed=int(body.get("seed", 0)),
                rtf=float(body.get("rtf", 1.0)),
            )
        except ValueError as err:
            raise HTTPException(status_code=400, detail=str(err))
        return {"id": session.id}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        try:
            return manager.get(session_id).snapshot()
        except KeyError as err:
            raise HTTPException(status_code=404, detail=str(err))

    @app.post("/sessions/{session_id}/perturb")
    def perturb(session_id: str, body: dict):
        mutation = body.get("mutation", body)
        try:
            state = manager.perturb(session_id, mutation)
        except KeyError as err:
            raise HTTPException(status_code=404, detail=str(err))
        except (InvariantViolation, ValueError) as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {"ok": True, "state": state}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str):
        try:
            manager.get(session_id)
        except KeyError as err:
            raise HTTPException(status_code=404, detail=str(err))

        def sse():
            for event in manager.event_stream(session_id):
                yield f"data: {json.dumps(event)}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    return app
