"""HTTP front end for the annotation service.

Thin JSON-over-HTTP layer on the stdlib threading server; all state and
validation live in :mod:`sarquant.service`.  Optionally serves a static
annotation UI from a directory.  CORS is wide open so a UI served from
another origin can talk to the API during development.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import posixpath
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .service import (
    AnnotationService,
    ConflictError,
    NotFoundError,
    ServiceError,
    ValidationError,
    parse_sentences_jsonl,
)

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 64 * 1024 * 1024


class AnnotationHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, service: AnnotationService, ui_dir: str | None = None):
        super().__init__(address, AnnotationRequestHandler)
        self.service = service
        self.ui_dir = os.path.realpath(ui_dir) if ui_dir else None


class AnnotationRequestHandler(BaseHTTPRequestHandler):
    server: AnnotationHTTPServer
    protocol_version = "HTTP/1.1"

    # -- plumbing --

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        logger.debug("%s - %s", self.address_string(), format % args)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_body(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, obj) -> None:
        body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
        self._send_body(status, body, "application/json; charset=utf-8")

    def _send_empty(self, status: int) -> None:
        self.send_response(status)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length < 0 or length > MAX_BODY_BYTES:
            raise ValidationError(f"unacceptable request body size {length}")
        return self.rfile.read(length)

    def _handle_service_error(self, exc: ServiceError) -> None:
        if isinstance(exc, NotFoundError):
            self._send_json(404, {"error": "not_found", "detail": str(exc)})
        elif isinstance(exc, ConflictError):
            self._send_json(409, {"error": exc.kind, "detail": str(exc)})
        else:
            self._send_json(422, {"error": "validation", "detail": str(exc)})

    # -- routes --

    def do_OPTIONS(self):
        self._send_empty(204)

    def do_GET(self):
        url = urlsplit(self.path)
        query = parse_qs(url.query)
        try:
            if url.path == "/api/next":
                self._get_next(query)
            elif url.path == "/api/progress":
                self._send_json(200, self.server.service.progress().as_dict())
            elif url.path == "/api/export":
                self._get_export(query)
            else:
                self._serve_static(url.path)
        except ServiceError as exc:
            self._handle_service_error(exc)

    def do_POST(self):
        url = urlsplit(self.path)
        try:
            if url.path == "/api/votes":
                self._post_vote()
            elif url.path == "/api/import":
                self._post_import()
            else:
                self._send_json(404, {"error": "not_found"})
        except ServiceError as exc:
            self._handle_service_error(exc)

    def _get_next(self, query: dict) -> None:
        annotator = (query.get("annotator") or [""])[0]
        if not annotator:
            raise ValidationError("query parameter 'annotator' is required")
        sentence = self.server.service.next_task(annotator)
        if sentence is None:
            self._send_empty(204)
            return
        self._send_json(
            200,
            {
                "sentence_id": sentence.id,
                "text": sentence.text,
                "category": sentence.category,
            },
        )

    def _get_export(self, query: dict) -> None:
        raw = (query.get("include_partial") or ["false"])[0].lower()
        if raw not in ("true", "false", "1", "0"):
            raise ValidationError("include_partial must be true or false")
        include_partial = raw in ("true", "1")
        lines = list(self.server.service.export_corpus(include_partial=include_partial))
        body = ("".join(line + "\n" for line in lines)).encode("utf-8")
        self._send_body(200, body, "application/x-ndjson; charset=utf-8")

    def _post_vote(self) -> None:
        try:
            payload = json.loads(self._read_body().decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ValidationError("request body must be a JSON object") from None
        if not isinstance(payload, dict):
            raise ValidationError("request body must be a JSON object")
        annotator = payload.get("annotator")
        sentence_id = payload.get("sentence_id")
        value = payload.get("value")
        if not isinstance(annotator, str) or not annotator:
            raise ValidationError("field 'annotator' must be a non-empty string")
        if not isinstance(sentence_id, str) or not sentence_id:
            raise ValidationError("field 'sentence_id' must be a non-empty string")
        if not isinstance(value, bool):
            raise ValidationError("field 'value' must be true or false")
        self.server.service.submit_vote(annotator, sentence_id, 1 if value else 0)
        self._send_json(201, {"status": "recorded"})

    def _post_import(self) -> None:
        try:
            text = self._read_body().decode("utf-8")
        except UnicodeDecodeError:
            raise ValidationError("request body must be UTF-8 JSON Lines") from None
        items = parse_sentences_jsonl(text)
        count = self.server.service.import_sentences(items)
        self._send_json(201, {"imported": count})

    # -- static UI --

    def _serve_static(self, path: str) -> None:
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            self._send_json(404, {"error": "not_found"})
            return
        clean = posixpath.normpath(path.lstrip("/")) or "."
        if clean == ".":
            clean = "index.html"
        full = os.path.realpath(os.path.join(ui_dir, clean))
        if not (full == ui_dir or full.startswith(ui_dir + os.sep)):
            self._send_json(404, {"error": "not_found"})
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            self._send_json(404, {"error": "not_found"})
            return
        content_type = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as handle:
            body = handle.read()
        self._send_body(200, body, content_type)


def make_server(
    host: str,
    port: int,
    data_dir: str | os.PathLike,
    quorum: int = 11,
    ui_dir: str | None = None,
) -> AnnotationHTTPServer:
    """Open the event log under data_dir and bind the HTTP server."""
    service = AnnotationService.open(data_dir, quorum=quorum)
    return AnnotationHTTPServer((host, port), service, ui_dir=ui_dir)


def serve(
    host: str,
    port: int,
    data_dir: str | os.PathLike,
    quorum: int = 11,
    ui_dir: str | None = None,
) -> None:
    """Run the annotation service until interrupted."""
    server = make_server(host, port, data_dir, quorum=quorum, ui_dir=ui_dir)
    bound_host, bound_port = server.server_address[:2]
    print(f"listening on http://{bound_host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        server.service.close()
