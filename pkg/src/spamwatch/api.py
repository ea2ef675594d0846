"""Read-only JSON API over a :class:`DetectionStore`.

Routes::

    GET /api/groups                  ?keyword=&date=YYYY-MM-DD
    GET /api/groups/{id}
    GET /api/groups/{id}/accounts
    GET /api/campaigns
    GET /api/campaigns/{email}
    GET /api/blacklist               ?kind=email|url|account
    GET /api/stats/daily             ?keyword=
    GET /api/status

Every list is paginated with ``limit`` (default 100, max 1000) and ``offset``.
"""

from __future__ import annotations

import json
import re
import threading
from collections.abc import Callable
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, unquote, urlsplit

from .store import DetectionStore

DEFAULT_LIMIT = 100
MAX_LIMIT = 1000


class BadRequest(ValueError):
    pass


def _page(items: list[Any], query: dict[str, list[str]]) -> dict[str, Any]:
    try:
        limit = int(query.get("limit", [DEFAULT_LIMIT])[0])
        offset = int(query.get("offset", [0])[0])
    except ValueError as exc:
        raise BadRequest("limit and offset must be integers") from exc
    if limit < 1 or offset < 0:
        raise BadRequest("limit must be >= 1 and offset >= 0")
    limit = min(limit, MAX_LIMIT)
    return {"items": items[offset:offset + limit], "total": len(items),
            "limit": limit, "offset": offset}


_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def handle(store: DetectionStore, path: str, query: dict[str, list[str]],
           status: Callable[[], dict[str, Any]] | None = None) -> tuple[int, Any]:
    """Route one GET; returns ``(http_status, json_body)``."""
    parts = [unquote(p) for p in path.strip("/").split("/")]
    if parts[:1] != ["api"]:
        return 404, {"error": "not found"}
    parts = parts[1:]
    one = lambda key: query.get(key, [None])[0]  # noqa: E731
    try:
        if parts == ["groups"]:
            day = one("date")
            if day is not None and not _DATE_RE.match(day):
                raise BadRequest("date must be YYYY-MM-DD")
            ids = store.group_ids(keyword=one("keyword"), day=day)
            return 200, _page([store.group_summary(i) for i in ids], query)
        if len(parts) == 2 and parts[0] == "groups":
            summary = store.group_summary(parts[1])
            return (200, summary) if summary else (404, {"error": "unknown group"})
        if len(parts) == 3 and parts[0] == "groups" and parts[2] == "accounts":
            accounts = store.group_accounts(parts[1])
            if accounts is None:
                return 404, {"error": "unknown group"}
            return 200, _page(accounts, query)
        if parts == ["campaigns"]:
            return 200, _page(store.campaigns(), query)
        if len(parts) == 2 and parts[0] == "campaigns":
            camp = store.campaign(parts[1])
            return (200, camp) if camp else (404, {"error": "unknown campaign"})
        if parts == ["blacklist"]:
            kind = one("kind")
            if kind is not None and kind not in ("email", "url", "account"):
                raise BadRequest("kind must be email, url or account")
            return 200, _page(store.blacklist(kind), query)
        if parts == ["stats", "daily"]:
            return 200, _page(store.daily_stats(one("keyword")), query)
        if parts == ["status"]:
            body = {"groups": len(store)}
            if status is not None:
                body.update(status())
            return 200, body
    except BadRequest as exc:
        return 400, {"error": str(exc)}
    return 404, {"error": "not found"}


def encode(body: Any) -> bytes:
    return json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    server: ApiServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002
        pass

    def do_GET(self) -> None:  # noqa: N802
        parts = urlsplit(self.path)
        code, body = handle(self.server.store, parts.path, parse_qs(parts.query),
                            self.server.status_fn)
        data = encode(body)
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, store: DetectionStore, host: str = "127.0.0.1", port: int = 0,
                 status_fn: Callable[[], dict[str, Any]] | None = None):
        super().__init__((host, port), _Handler)
        self.store = store
        self.status_fn = status_fn
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> ApiServer:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


def serve_api(store: DetectionStore, port: int = 0, host: str = "127.0.0.1",
              status_fn: Callable[[], dict[str, Any]] | None = None) -> ApiServer:
    """Start the API on a background thread and return the running server."""
    return ApiServer(store, host, port, status_fn).start()
