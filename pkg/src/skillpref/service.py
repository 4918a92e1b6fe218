"""HTTP bridge between the training loop and a human labeler's browser.

The trainer blocks inside LabelMailbox.request_label for at most its
timeout while the browser polls GET /api/pending, renders both position
traces, and POSTs a choice to /api/labels. Payloads carry positions and
step counts only, never rewards, so the labeler judges behavior alone.
A skip re-queues the same query a bounded number of times, then the
query is dropped and costs no feedback budget.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

DEFAULT_PORT = 8321
MAX_SKIPS = 2

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class _PendingRecord:
    __slots__ = ("query_id", "left", "right", "env", "step_count", "created_at",
                 "attempts", "outcome")

    def __init__(self, query_id, left, right, env, step_count):
        self.query_id = query_id
        self.left = left
        self.right = right
        self.env = env
        self.step_count = step_count
        self.created_at = time.time()
        self.attempts = 0
        self.outcome = None


class LabelMailbox:
    """Single-slot handoff between one trainer and one labeler.

    The trainer asks one query at a time, so at most one query is ever
    pending. Labels are delivered exactly once: a second POST for an
    already-resolved query id conflicts, and ids withdrawn by a trainer
    timeout no longer exist.
    """

    def __init__(self, max_skips: int = MAX_SKIPS):
        self.max_skips = max_skips
        self._cv = threading.Condition()
        self._next_id = 0
        self._current: _PendingRecord | None = None
        self._resolved: set[str] = set()
        self._withdrawn: set[str] = set()

    def request_label(self, *, left, right, env, step_count, timeout):
        """Block until the labeler answers; returns the choice string.

        "left", "right", or "dropped" (too many skips); None when the
        timeout expires first, which withdraws the query.
        """
        with self._cv:
            query_id = f"q{self._next_id}"
            self._next_id += 1
            record = _PendingRecord(query_id, left, right, env, step_count)
            self._current = record
            deadline = time.monotonic() + timeout
            while record.outcome is None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self._cv.wait(remaining)
            self._current = None
            if record.outcome is None:
                self._withdrawn.add(query_id)
                return None
            self._resolved.add(query_id)
            return record.outcome

    def pending(self) -> dict | None:
        with self._cv:
            record = self._current
            if record is None or record.outcome is not None:
                return None
            return {
                "query_id": record.query_id,
                "left": {"positions": record.left},
                "right": {"positions": record.right},
                "env": record.env,
                "step_count": record.step_count,
            }

    @property
    def queue_depth(self) -> int:
        return 0 if self.pending() is None else 1

    def post(self, query_id: str, choice: str) -> str:
        """Deliver one labeler action; returns accepted/conflict/not_found."""
        if choice not in ("left", "right", "skip"):
            raise ValueError(f"choice must be left, right, or skip, got {choice!r}")
        with self._cv:
            record = self._current
            if record is None or record.query_id != query_id:
                if query_id in self._resolved:
                    return "conflict"
                return "not_found"
            if record.outcome is not None:
                return "conflict"
            if choice == "skip":
                record.attempts += 1
                if record.attempts > self.max_skips:
                    record.outcome = "dropped"
                    self._cv.notify_all()
            else:
                record.outcome = choice
                self._cv.notify_all()
            return "accepted"


class RunStatus:
    """Mutable run progress shared between the trainer and the service."""

    def __init__(self, feedback_budget: int = 0):
        self._lock = threading.Lock()
        self._fields = {
            "step": 0,
            "feedback_used": 0,
            "feedback_budget": feedback_budget,
            "latest_return_gt": None,
            "done": False,
        }

    def update(self, **kwargs) -> None:
        with self._lock:
            for key, value in kwargs.items():
                if key not in self._fields:
                    raise KeyError(f"unknown status field {key!r}")
                self._fields[key] = value

    def snapshot(self) -> dict:
        with self._lock:
            return dict(self._fields)


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/api/pending":
            payload = self.server.mailbox.pending()
            if payload is None:
                self.send_response(204)
                self.end_headers()
                return
            self._send_json(200, payload)
            return
        if self.path == "/api/status":
            status = self.server.status.snapshot()
            status["queue_depth"] = self.server.mailbox.queue_depth
            self._send_json(200, status)
            return
        if self.path.startswith("/api/"):
            self._send_json(404, {"error": "unknown endpoint"})
            return
        self._serve_static()

    def do_POST(self):
        if self.path != "/api/labels":
            self._send_json(404, {"error": "unknown endpoint"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
            query_id = body["query_id"]
            choice = body["choice"]
        except (json.JSONDecodeError, KeyError, UnicodeDecodeError):
            self._send_json(400, {"error": "expected JSON with query_id and choice"})
            return
        if choice not in ("left", "right", "skip"):
            self._send_json(400, {"error": f"bad choice {choice!r}"})
            return
        result = self.server.mailbox.post(query_id, choice)
        code = {"accepted": 200, "conflict": 409, "not_found": 404}[result]
        self._send_json(code, {"status": result, "query_id": query_id})

    def _serve_static(self):
        root = self.server.static_dir
        if root is None:
            self._send_json(404, {"error": "no static assets configured"})
            return
        name = self.path.split("?", 1)[0]
        if name in ("", "/"):
            name = "/index.html"
        target = (root / name.lstrip("/")).resolve()
        if not target.is_relative_to(root.resolve()) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        body = target.read_bytes()
        self.send_response(200)
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class LabelServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, mailbox: LabelMailbox, status: RunStatus,
                 static_dir: Path | None = None):
        super().__init__(address, _Handler)
        self.mailbox = mailbox
        self.status = status
        self.static_dir = static_dir


def make_server(
    mailbox: LabelMailbox,
    status: RunStatus,
    port: int = DEFAULT_PORT,
    host: str = "127.0.0.1",
    static_dir=None,
) -> LabelServer:
    static = Path(static_dir) if static_dir is not None else None
    return LabelServer((host, port), mailbox, status, static_dir=static)


def default_static_dir() -> Path | None:
    candidate = Path("frontend") / "dist"
    return candidate if candidate.is_dir() else None


def serve_run(config, port: int = DEFAULT_PORT, out_dir="out", static_dir=None) -> int:
    """Host the label service while one human-teacher run trains."""
    from skillpref.harness.figures import learning_curve_figure
    from skillpref.harness.metrics import RUN_HEADER, MetricsSink, run_rows
    from skillpref.training import run

    if config.teacher != "human":
        config = replace(config, teacher="human")
    mailbox = LabelMailbox()
    status = RunStatus(feedback_budget=config.feedback_budget)
    static = static_dir if static_dir is not None else default_static_dir()
    server = make_server(mailbox, status, port=port, static_dir=static)
    host, bound_port = server.server_address[:2]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    print(f"label service listening on http://{host}:{bound_port}/")
    if static is None:
        print("no frontend build found; API endpoints only")
    try:
        metrics = run(config, mailbox=mailbox, status=status)
    finally:
        status.update(done=True)
        server.shutdown()
        thread.join()
    sink = MetricsSink(out_dir)
    path = sink.append("run", RUN_HEADER, run_rows(metrics))
    if metrics.rows:
        learning_curve_figure(metrics.rows, sink.out_dir / "learning_curve.png")
    print(f"wrote {path}")
    return 0
