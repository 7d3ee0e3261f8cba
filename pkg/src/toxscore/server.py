"""Minimal threaded HTTP scoring service over an immutable bundle.

Two endpoints: ``POST /score`` takes ``{"text": string}`` and returns
``{"score": number, "cleaned": string}``; ``GET /healthz`` reports
``{"status": "ok", "model_version": string}``. Malformed requests get a
400 with an ``error`` body. The bundle is read-only, so concurrent
requests need no locking.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .persistence import ModelBundle
from .pipeline import score_text

logger = logging.getLogger(__name__)


class _ScoreHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 - http.server API
        if self.path == "/healthz":
            bundle: ModelBundle = self.server.bundle  # type: ignore[attr-defined]
            self._reply(200, {"status": "ok", "model_version": bundle.version_string})
        else:
            self._reply(404, {"error": f"no such path: {self.path}"})

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/score":
            self._reply(404, {"error": f"no such path: {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            self._reply(400, {"error": f"malformed request body: {exc}"})
            return
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            self._reply(400, {"error": 'request body must be {"text": string}'})
            return
        bundle: ModelBundle = self.server.bundle  # type: ignore[attr-defined]
        scored = score_text(bundle, payload["text"])
        self._reply(200, {"score": scored.score, "cleaned": scored.cleaned})

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s - %s", self.address_string(), fmt % args)


class ScoreServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, bundle: ModelBundle, host: str, port: int):
        super().__init__((host, port), _ScoreHandler)
        self.bundle = bundle


def make_server(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 8000) -> ScoreServer:
    return ScoreServer(bundle, host, port)
