"""Local HTTP server for a :class:`SyntheticWeb`, reachable as a forward proxy.

Clients point their plain-HTTP proxy at the server and request absolute URLs
on any synthetic host. Every request is appended to :attr:`hop_log`.
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urljoin

from .model import MalformedUrl
from .resolver import SyntheticWeb, client_redirect_page


class _Handler(BaseHTTPRequestHandler):
    server: _Server
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _target(self) -> str:
        if self.path.startswith(("http://", "https://")):
            return self.path
        host = self.headers.get("Host", "localhost")
        return f"http://{host}{self.path}"

    def _send(self, status: int, body: str = "", location: str | None = None) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        if location:
            self.send_header("Location", location)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:  # noqa: N802
        url = self._target()
        try:
            rule = self.server.web.match(url)
        except MalformedUrl:
            rule = None
        if rule is None:
            status, body, location = 502, "unknown host", None
        elif rule.server_redirect is not None:
            status, body, location = rule.status, "", urljoin(url, rule.server_redirect)
        elif rule.client_redirect is not None:
            status, body, location = 200, client_redirect_page(urljoin(url, rule.client_redirect)), None
        else:
            status, body, location = rule.status, rule.page or "", None
        with self.server.log_lock:
            self.server.hop_log.append((url, status))
        self._send(status, body, location)


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr, web: SyntheticWeb):
        super().__init__(addr, _Handler)
        self.web = web
        self.hop_log: list[tuple[str, int]] = []
        self.log_lock = threading.Lock()


class SyntheticWebServer:
    """Context manager running the synthetic web on a background thread."""

    def __init__(self, web: SyntheticWeb, host: str = "127.0.0.1", port: int = 0):
        self._server = _Server((host, port), web)
        self._thread: threading.Thread | None = None

    @property
    def proxy_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def hop_log(self) -> list[tuple[str, int]]:
        with self._server.log_lock:
            return list(self._server.hop_log)

    def clear_log(self) -> None:
        with self._server.log_lock:
            self._server.hop_log.clear()

    def start(self) -> SyntheticWebServer:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> SyntheticWebServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
