"""HTTP endpoint serving a redlist file.

``GET /redlist`` returns the hex-lines body with ``Last-Modified``; ``HEAD``
returns headers only; ``If-Modified-Since`` at or after the file's mtime
yields a bodiless 304. The file is re-read whenever its mtime moves.
"""

from __future__ import annotations

import email.utils
import logging
import os
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)

PATH = "/redlist"


class _FileCache:
    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self._stamp = -1
        self._body = b""

    def current(self) -> tuple[bytes, int]:
        stamp = int(self.path.stat().st_mtime)
        with self._lock:
            if stamp != self._stamp:
                self._body = self.path.read_bytes()
                self._stamp = stamp
            return self._body, self._stamp


class RedlistHandler(BaseHTTPRequestHandler):
    cache: _FileCache  # set on the per-server subclass
    server_version = "redlistsim"

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s " + fmt, self.address_string(), *args)

    def _respond(self, with_body: bool) -> None:
        if self.path.split("?", 1)[0] != PATH:
            self.send_error(HTTPStatus.NOT_FOUND)
            return
        try:
            body, stamp = self.cache.current()
        except OSError:
            self.send_error(HTTPStatus.SERVICE_UNAVAILABLE)
            return
        last_modified = email.utils.formatdate(stamp, usegmt=True)
        since = self.headers.get("If-Modified-Since")
        if since:
            try:
                since_ts = int(email.utils.parsedate_to_datetime(since).timestamp())
            except (TypeError, ValueError):
                since_ts = None
            if since_ts is not None and stamp <= since_ts:
                self.send_response(HTTPStatus.NOT_MODIFIED)
                self.send_header("Last-Modified", last_modified)
                self.end_headers()
                return
        self.send_response(HTTPStatus.OK)
        self.send_header("Content-Type", "text/plain; charset=ascii")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Last-Modified", last_modified)
        self.end_headers()
        if with_body:
            self.wfile.write(body)

    def do_GET(self) -> None:
        self._respond(with_body=True)

    def do_HEAD(self) -> None:
        self._respond(with_body=False)


def make_server(path: str | os.PathLike, bind: str = "127.0.0.1:8333") -> ThreadingHTTPServer:
    """Build (but do not start) a server for ``path``. Port 0 picks a free port."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(p)
    p.read_bytes()
    host, _, port = bind.rpartition(":")
    handler = type("BoundRedlistHandler", (RedlistHandler,), {"cache": _FileCache(p)})
    return ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)


def serve_in_thread(path: str | os.PathLike, bind: str = "127.0.0.1:0") -> tuple[ThreadingHTTPServer, str]:
    """Start a server on a daemon thread and return it with its ``/redlist`` URL."""
    server = make_server(path, bind)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}{PATH}"


def serve_forever(path: str | os.PathLike, bind: str, ready: Optional[threading.Event] = None) -> None:
    server = make_server(path, bind)
    host, port = server.server_address[:2]
    log.info("serving %s on http://%s:%s%s", path, host, port, PATH)
    if ready is not None:
        ready.set()
    try:
        server.serve_forever()
    finally:
        server.server_close()
