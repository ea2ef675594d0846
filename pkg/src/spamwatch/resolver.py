"""Landing-URL resolution and phishing / secret-URL classification.

Server-side redirects are followed hop by hop through an :class:`HttpClient`;
client-side behaviour (meta refresh, script redirects) is delegated to a
:class:`NavigationClient`. Both have an in-process implementation over a
scripted :class:`SyntheticWeb` and a urllib implementation for real HTTP.
"""

from __future__ import annotations

import fnmatch
import html
import json
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol
from urllib.parse import urljoin

from .model import MalformedUrl, Url, extract_netloc

MAX_RETRY = 5
HOP_TIMEOUT = 10.0
TOTAL_BUDGET = 60.0


class NetworkError(OSError):
    pass


class NavigationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HttpResponse:
    status: int
    url: str
    """Where the response points: the Location target for redirects, else the request URL."""
    body: str = ""


class HttpClient(Protocol):
    def get(self, url: str) -> HttpResponse: ...


class NavigationClient(Protocol):
    def navigate(self, url: str) -> str:
        """Final landing URL after all server and client-side redirects."""
        ...


# --------------------------------------------------------------------------
# synthetic web


def _key(url: str) -> tuple[str, str]:
    u = extract_netloc(url)
    path = u.path or "/"
    if u.query:
        path += "?" + u.query
    return u.host, path


@dataclass(frozen=True)
class Rule:
    pattern: str
    server_redirect: str | None = None
    client_redirect: str | None = None
    page: str | None = None
    status: int = 200

    @classmethod
    def from_json(cls, pattern: str, obj: dict[str, Any]) -> Rule:
        if "server_redirect" in obj:
            return cls(pattern, server_redirect=obj["server_redirect"], status=int(obj.get("status", 301)))
        if "client_redirect" in obj:
            return cls(pattern, client_redirect=obj["client_redirect"])
        if "page" in obj:
            return cls(pattern, page=str(obj["page"]), status=int(obj.get("status", 200)))
        if "status" in obj:
            return cls(pattern, page="", status=int(obj["status"]))
        raise ValueError(f"rule for {pattern!r} needs server_redirect, client_redirect or page")

    def to_json(self) -> dict[str, Any]:
        if self.server_redirect is not None:
            out: dict[str, Any] = {"server_redirect": self.server_redirect}
            if self.status != 301:
                out["status"] = self.status
            return out
        if self.client_redirect is not None:
            return {"client_redirect": self.client_redirect}
        out = {"page": self.page or ""}
        if self.status != 200:
            out["status"] = self.status
        return out

    def specificity(self) -> tuple[int, int, str]:
        wild = any(c in self.pattern for c in "*?[")
        return (1 if wild else 0, -len(self.pattern), self.pattern)


class SyntheticWeb:
    """A declarative web: ``host/path`` patterns (fnmatch globs) mapped to behaviours.

    A pattern without a ``/`` applies to every path on that host. Exact patterns
    beat globs; among globs the longest wins.
    """

    def __init__(self, rules: dict[str, dict[str, Any]] | None = None):
        self.rules: dict[str, Rule] = {}
        self._exact: dict[str, Rule] = {}
        self._globs: list[Rule] = []
        self._hosts: set[str] = set()
        for pattern, obj in (rules or {}).items():
            self.add(pattern, **obj)

    def add(self, pattern: str, **behaviour: Any) -> None:
        host, sep, path = pattern.partition("/")
        pattern = host.lower() + sep + path
        rule = Rule.from_json(pattern, behaviour)
        self.rules[pattern] = rule
        self._hosts.add(host.lower())
        if sep and not any(c in pattern for c in "*?["):
            self._exact[pattern] = rule
        else:
            self._globs = sorted((r for p, r in self.rules.items() if p not in self._exact),
                                 key=Rule.specificity)

    @classmethod
    def from_file(cls, path: str | Path) -> SyntheticWeb:
        return cls(json.loads(Path(path).read_text("utf-8")))

    def to_json(self) -> dict[str, Any]:
        return {p: self.rules[p].to_json() for p in sorted(self.rules)}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n", "utf-8")

    def hosts(self) -> set[str]:
        return set(self._hosts)

    def match(self, url: str) -> Rule | None:
        """Rule for ``url``; ``None`` when the host is unknown to this web.

        A known host with no matching path answers 404.
        """
        host, path = _key(url)
        target = host + path
        if target in self._exact:
            return self._exact[target]
        for rule in self._globs:
            pat = rule.pattern if "/" in rule.pattern else rule.pattern + "/*"
            if fnmatch.fnmatchcase(target, pat):
                return rule
        if host in self._hosts:
            return Rule(target, page="not found", status=404)
        return None

    def respond(self, url: str) -> HttpResponse:
        rule = self.match(url)
        if rule is None:
            raise NetworkError(f"cannot resolve host for {url}")
        if rule.server_redirect is not None:
            return HttpResponse(rule.status, urljoin(url, rule.server_redirect))
        if rule.client_redirect is not None:
            target = urljoin(url, rule.client_redirect)
            return HttpResponse(200, url, client_redirect_page(target))
        return HttpResponse(rule.status, url, rule.page or "")


def client_redirect_page(target: str) -> str:
    t = html.escape(target, quote=True)
    return (
        "<html><head>"
        f'<meta http-equiv="refresh" content="0;url={t}">'
        f"<script>window.location.replace({json.dumps(target)});</script>"
        "</head><body></body></html>"
    )


_META_RE = re.compile(
    r"""<meta[^>]+http-equiv=["']?refresh["']?[^>]*content=["']?\s*\d*\s*;?\s*url=([^"'>]+)""",
    re.IGNORECASE,
)
_JS_RE = re.compile(r"""(?:window\.)?location(?:\.href)?(?:\.replace\(|\s*=\s*)\s*["']([^"']+)["']""")


def find_client_redirect(body: str) -> str | None:
    for regex in (_META_RE, _JS_RE):
        m = regex.search(body)
        if m:
            return html.unescape(m.group(1).strip())
    return None


class SyntheticHttpClient:
    """Answers GETs from a :class:`SyntheticWeb`; records every request."""

    def __init__(self, web: SyntheticWeb):
        self.web = web
        self.log: list[tuple[str, int]] = []

    def get(self, url: str) -> HttpResponse:
        resp = self.web.respond(url)
        self.log.append((url, resp.status))
        return resp


class SyntheticNavigator:
    """Browser stand-in: follows every server and client-side redirect in a synthetic web."""

    def __init__(self, web: SyntheticWeb, max_hops: int = 20):
        self.web = web
        self.max_hops = max_hops

    def navigate(self, url: str) -> str:
        current = url
        for _ in range(self.max_hops):
            rule = self.web.match(current)
            if rule is None:
                raise NavigationError(f"cannot reach {current}")
            if rule.server_redirect is not None:
                current = urljoin(current, rule.server_redirect)
            elif rule.client_redirect is not None:
                current = urljoin(current, rule.client_redirect)
            else:
                return current
        raise NavigationError(f"too many redirects from {url}")


# --------------------------------------------------------------------------
# real HTTP


class _NoRedirect(urllib.request.HTTPRedirectHandler):
    def redirect_request(self, req, fp, code, msg, headers, newurl):
        return None


class UrllibHttpClient:
    """One GET per call, redirects not followed. ``proxy`` routes plain-HTTP traffic."""

    def __init__(self, timeout: float = HOP_TIMEOUT, proxy: str | None = None):
        self.timeout = timeout
        handlers: list[Any] = [_NoRedirect()]
        handlers.append(urllib.request.ProxyHandler({"http": proxy} if proxy else {}))
        self._opener = urllib.request.build_opener(*handlers)

    def _fetch(self, url: str) -> tuple[int, str | None, str]:
        req = urllib.request.Request(url, headers={"User-Agent": "spamwatch-resolver/0.1"})
        try:
            with self._opener.open(req, timeout=self.timeout) as resp:
                body = resp.read(1 << 20).decode("utf-8", "replace")
                return resp.status, resp.headers.get("Location"), body
        except urllib.error.HTTPError as exc:
            body = exc.read(1 << 20).decode("utf-8", "replace") if exc.fp else ""
            return exc.code, exc.headers.get("Location"), body
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise NetworkError(f"GET {url} failed: {exc}") from exc

    def get(self, url: str) -> HttpResponse:
        status, location, body = self._fetch(url)
        if 300 <= status < 400 and location:
            return HttpResponse(status, urljoin(url, location), body)
        return HttpResponse(status, url, body)


class UrllibNavigator:
    """Follows 3xx responses and meta-refresh / ``location`` script redirects.

    Not a browser; it covers the redirect styles the synthetic web emits.
    """

    def __init__(self, http: UrllibHttpClient, max_hops: int = 20):
        self.http = http
        self.max_hops = max_hops

    def navigate(self, url: str) -> str:
        current = url
        for _ in range(self.max_hops):
            try:
                resp = self.http.get(current)
            except NetworkError as exc:
                raise NavigationError(str(exc)) from exc
            if 300 <= resp.status < 400 and resp.url != current:
                current = resp.url
                continue
            target = find_client_redirect(resp.body) if resp.status == 200 else None
            if target:
                current = urljoin(current, target)
                continue
            return current
        raise NavigationError(f"too many redirects from {url}")


# --------------------------------------------------------------------------
# resolution


@dataclass(frozen=True)
class ResolvedUrl:
    input_url: Url
    chain: tuple[tuple[str, int | None], ...]
    final_url: Url
    has_secret_url: bool | None
    is_phishing: bool | None
    num_retries: int
    status: str = "ok"
    """``ok``, ``failed`` (server-side chain broke) or ``indeterminate`` (navigation failed)."""
    landing_bare: str | None = None
    landing_full: str | None = None
    error: str | None = field(default=None)

    @property
    def malicious(self) -> bool:
        return bool(self.is_phishing or self.has_secret_url)

    def to_json(self) -> dict[str, Any]:
        return {
            "input_url": self.input_url.geturl(),
            "chain": [[u, c] for u, c in self.chain],
            "final_url": self.final_url.geturl(),
            "has_secret_url": self.has_secret_url,
            "is_phishing": self.is_phishing,
            "num_retries": self.num_retries,
            "status": self.status,
            "landing_bare": self.landing_bare,
            "landing_full": self.landing_full,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> ResolvedUrl:
        return cls(
            input_url=extract_netloc(obj["input_url"]),
            chain=tuple((u, c) for u, c in obj["chain"]),
            final_url=extract_netloc(obj["final_url"]),
            has_secret_url=obj["has_secret_url"],
            is_phishing=obj["is_phishing"],
            num_retries=obj["num_retries"],
            status=obj.get("status", "ok"),
            landing_bare=obj.get("landing_bare"),
            landing_full=obj.get("landing_full"),
            error=obj.get("error"),
        )


@dataclass
class RedirectResult:
    final: Url
    chain: list[tuple[str, int | None]]
    num_retries: int
    error: str | None = None


def follow_redirects(top_url: Url | str, http: HttpClient, max_retry: int = MAX_RETRY,
                     redirect_codes: frozenset[int] = frozenset({301}),
                     total_budget: float = TOTAL_BUDGET) -> RedirectResult:
    """GET repeatedly while the last answer was a redirect and retries remain.

    The loop starts as if the previous code were 301, so there is always at
    least one request. Only 301 continues by default; pass ``redirect_codes``
    to accept other 3xx.
    """
    if max_retry < 1:
        raise ValueError("max_retry must be >= 1")
    url = top_url.geturl() if isinstance(top_url, Url) else extract_netloc(top_url).geturl()
    codes = frozenset(redirect_codes) | {301}
    chain: list[tuple[str, int | None]] = []
    code = 301
    retries = 0
    started = time.monotonic()
    while code in codes and retries < max_retry:
        if time.monotonic() - started > total_budget:
            return RedirectResult(extract_netloc(url), chain or [(url, None)], retries,
                                  "resolution budget exhausted")
        try:
            resp = http.get(url)
        except (NetworkError, TimeoutError) as exc:
            chain.append((url, None))
            return RedirectResult(extract_netloc(url), chain, retries + 1, str(exc))
        chain.append((url, resp.status))
        code = resp.status
        url = resp.url
        retries += 1
    return RedirectResult(extract_netloc(url), chain, retries)


def classify_url(top_url: Url | str, http: HttpClient, nav: NavigationClient,
                 max_retry: int = MAX_RETRY,
                 redirect_codes: frozenset[int] = frozenset({301})) -> ResolvedUrl:
    """Resolve ``top_url`` and compare where the bare host and the full URL land.

    ``has_secret_url``: the bare host and the full URL land on different hosts.
    ``is_phishing``: either of them lands somewhere other than the resolved host.
    """
    top = top_url if isinstance(top_url, Url) else extract_netloc(top_url)
    res = follow_redirects(top, http, max_retry, redirect_codes)
    base = dict(input_url=top, chain=tuple(res.chain), final_url=res.final,
                num_retries=res.num_retries)
    if res.error is not None:
        return ResolvedUrl(**base, has_secret_url=None, is_phishing=None, status="failed",
                           error=res.error)
    final = res.final
    try:
        u1 = extract_netloc(nav.navigate(final.bare()))
        u2 = extract_netloc(nav.navigate(final.geturl()))
    except (NavigationError, MalformedUrl, NetworkError) as exc:
        return ResolvedUrl(**base, has_secret_url=None, is_phishing=None,
                           status="indeterminate", error=str(exc))
    return ResolvedUrl(
        **base,
        has_secret_url=u1.netloc != u2.netloc,
        is_phishing=u1.netloc != final.netloc or u2.netloc != final.netloc,
        landing_bare=u1.geturl(),
        landing_full=u2.geturl(),
    )
