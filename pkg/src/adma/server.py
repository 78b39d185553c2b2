"""Interactive labeling over HTTP: the loop publishes its pending batch and
blocks until a human (or script) posts every label, then continues.

Protocol (JSON, UTF-8):
  GET  /api/queries -> {iteration, pending: [{instance_id, item_ref, score,
                        distinctiveness, uncertainty}]}
  POST /api/labels  body {instance_id, label}
                    -> 200 {accepted: true} | 409 duplicate | 422 invalid
  GET  /api/status  -> {iteration, queried, budget, labeled_count,
                        latest_metrics, history}
  GET  /api/classes -> {labels: [string]}

Anything outside /api/ is served from the optional static directory, which
is where the labeling console's built assets go.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .loop import OracleTimeout, QueryItem

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json; charset=utf-8",
}


class InteractiveOracle:
    """Oracle backed by label submissions arriving over HTTP.

    ``query`` publishes the batch and blocks on a condition variable until
    every pending id has exactly one accepted label, or the timeout elapses
    (raising OracleTimeout and withdrawing the batch, so the loop can suspend
    with its state unchanged).
    """

    def __init__(
        self,
        K_target: int,
        class_names: list[str] | None = None,
        timeout: float | None = None,
    ):
        if K_target < 2:
            raise ValueError("need at least 2 target classes")
        self.K_target = K_target
        self.class_names = list(class_names) if class_names else [
            f"class_{k}" for k in range(K_target)
        ]
        if len(self.class_names) != K_target:
            raise ValueError("class_names length does not match K_target")
        self.timeout = timeout
        self._cond = threading.Condition()
        self._pending: dict[int, QueryItem] = {}
        self._answers: dict[int, int] = {}
        self._iteration = 0
        self._status: dict = {
            "iteration": 0,
            "queried": 0,
            "budget": 0,
            "labeled_count": 0,
            "latest_metrics": None,
        }
        self._history: list[dict] = []

    # -- loop side ---------------------------------------------------------

    def query(self, items: list[QueryItem]) -> dict[int, int]:
        with self._cond:
            self._pending = {item.instance_id: item for item in items}
            self._answers = {}
            if items:
                self._iteration = items[0].iteration
            deadline = None if self.timeout is None else time.monotonic() + self.timeout
            while len(self._answers) < len(self._pending):
                wait_for = 1.0
                if deadline is not None:
                    wait_for = deadline - time.monotonic()
                    if wait_for <= 0:
                        self._pending = {}
                        self._answers = {}
                        raise OracleTimeout(
                            f"no complete label batch within {self.timeout} s"
                        )
                self._cond.wait(timeout=wait_for)
            answers = dict(self._answers)
            self._pending = {}
            self._answers = {}
            return answers

    def on_progress(self, status: dict) -> None:
        with self._cond:
            self._status = dict(status)
            latest = status.get("latest_metrics")
            if latest is not None and (
                not self._history or self._history[-1] != latest
            ):
                self._history.append(dict(latest))

    # -- HTTP side ---------------------------------------------------------

    def submit(self, instance_id, label) -> tuple[int, dict]:
        """Validate one label submission; returns (http_status, body)."""
        if isinstance(instance_id, bool) or not isinstance(instance_id, int):
            return 422, {"accepted": False, "error": "instance_id must be an integer"}
        if isinstance(label, bool) or not isinstance(label, int):
            return 422, {"accepted": False, "error": "label must be an integer"}
        with self._cond:
            if instance_id in self._answers:
                return 409, {
                    "accepted": False,
                    "error": f"instance {instance_id} already labeled this batch",
                }
            if instance_id not in self._pending:
                return 422, {
                    "accepted": False,
                    "error": f"instance {instance_id} is not pending",
                }
            if not 0 <= label < self.K_target:
                return 422, {
                    "accepted": False,
                    "error": f"label {label} outside [0, {self.K_target})",
                }
            self._answers[instance_id] = label
            self._cond.notify_all()
            return 200, {"accepted": True}

    def queries_payload(self) -> dict:
        with self._cond:
            pending = [
                {
                    "instance_id": item.instance_id,
                    "item_ref": item.item_ref,
                    "score": item.score,
                    "distinctiveness": item.distinctiveness,
                    "uncertainty": item.uncertainty,
                }
                for item in self._pending.values()
                if item.instance_id not in self._answers
            ]
            return {"iteration": self._iteration, "pending": pending}

    def status_payload(self) -> dict:
        with self._cond:
            payload = dict(self._status)
            payload["history"] = list(self._history)
            return payload

    def classes_payload(self) -> dict:
        return {"labels": list(self.class_names)}


class _Handler(BaseHTTPRequestHandler):
    oracle: InteractiveOracle
    static_dir: Path | None = None

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/api/queries":
            self._send_json(200, self.oracle.queries_payload())
        elif path == "/api/status":
            self._send_json(200, self.oracle.status_payload())
        elif path == "/api/classes":
            self._send_json(200, self.oracle.classes_payload())
        elif path.startswith("/api/"):
            self._send_json(404, {"error": f"unknown endpoint {path}"})
        else:
            self._serve_static(path)

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        if path != "/api/labels":
            self._send_json(404, {"error": f"unknown endpoint {path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(doc, dict):
                raise ValueError("body must be an object")
        except (ValueError, json.JSONDecodeError):
            self._send_json(422, {"accepted": False, "error": "malformed JSON body"})
            return
        status, payload = self.oracle.submit(doc.get("instance_id"), doc.get("label"))
        self._send_json(status, payload)

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_json(
                404, {"error": "no static assets configured; API lives under /api/"}
            )
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            self._send_json(404, {"error": "not found"})
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(404, {"error": f"not found: {path}"})
            return
        body = target.read_bytes()
        self.send_response(200)
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def serve_interactive_oracle(
    bind_address: str,
    K_target: int,
    class_names: list[str] | None = None,
    static_dir: str | Path | None = None,
    timeout: float | None = None,
) -> tuple[InteractiveOracle, ThreadingHTTPServer]:
    """Start the labeling service on ``host:port``; returns the oracle to
    hand to the loop and the running server (call .shutdown() to stop)."""
    host, _, port_s = bind_address.rpartition(":")
    if not host or not port_s.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind_address!r}")
    oracle = InteractiveOracle(K_target, class_names=class_names, timeout=timeout)
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "oracle": oracle,
            "static_dir": Path(static_dir) if static_dir is not None else None,
        },
    )
    server = ThreadingHTTPServer((host, int(port_s)), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return oracle, server
