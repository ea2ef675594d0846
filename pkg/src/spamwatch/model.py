"""Domain types shared across the pipeline, URL decomposition and text canonicalization.

Every type here is a frozen dataclass; instances are safe to hand between threads.
Timestamps are timezone-aware UTC ``datetime`` objects throughout.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any
from urllib.parse import urlsplit

AccountId = str


class MalformedUrl(ValueError):
    """Raised when a string has no parseable host."""


class ParseError(ValueError):
    """Raised when a tweet record cannot be decoded."""


# RFC 1123 labels; an optional trailing port is validated separately.
_LABEL = r"(?!-)[a-z0-9_-]{1,63}(?<!-)"
_HOST_RE = re.compile(rf"^{_LABEL}(?:\.{_LABEL})*\.?$")
_IPV4_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")
_URL_IN_TEXT_RE = re.compile(r"https?://\S+", re.IGNORECASE)


def parse_time(value: str | datetime) -> datetime:
    """Parse an ISO-8601 timestamp (``Z`` suffix allowed) into an aware UTC datetime."""
    if isinstance(value, datetime):
        dt = value
    else:
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_time(dt: datetime) -> str:
    return parse_time(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Url:
    raw: str
    scheme: str
    netloc: str
    path: str = ""
    query: str = ""
    fragment: str = ""

    def __str__(self) -> str:
        return self.geturl()

    def geturl(self) -> str:
        out = f"{self.scheme}://{self.netloc}{self.path}"
        if self.query:
            out += "?" + self.query
        if self.fragment:
            out += "#" + self.fragment
        return out

    @property
    def host(self) -> str:
        return self.netloc.rsplit(":", 1)[0] if _has_port(self.netloc) else self.netloc

    def bare(self) -> str:
        """Netloc-only form, as if the user typed just the host into a browser."""
        return f"{self.scheme}://{self.netloc}/"


def _has_port(netloc: str) -> bool:
    head, sep, tail = netloc.rpartition(":")
    return bool(sep) and tail.isdigit() and bool(head)


def extract_netloc(raw: str) -> Url:
    """Split ``raw`` into a :class:`Url` with a lowercase netloc.

    Scheme-less input such as ``dld.bz/abc`` is read as ``http``. User info is
    dropped from the netloc; a port, if present, is kept.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedUrl(f"empty url: {raw!r}")
    text = raw.strip()
    if "://" not in text:
        text = "http://" + text.lstrip("/")
    try:
        parts = urlsplit(text)
    except ValueError as exc:
        raise MalformedUrl(f"unparseable url: {raw!r}") from exc
    netloc = parts.netloc.rpartition("@")[2].lower()
    host = netloc.rsplit(":", 1)[0] if _has_port(netloc) else netloc
    if not host or not (_HOST_RE.match(host) or _IPV4_RE.match(host)):
        raise MalformedUrl(f"no host in url: {raw!r}")
    if "." not in host.strip(".") and host != "localhost":
        raise MalformedUrl(f"no host in url: {raw!r}")
    return Url(
        raw=raw,
        scheme=(parts.scheme or "http").lower(),
        netloc=netloc,
        path=parts.path,
        query=parts.query,
        fragment=parts.fragment,
    )


def canonicalize_text(text: str, strip_urls: bool = False) -> str:
    """NFKC-normalize, optionally drop URLs, and collapse all whitespace runs."""
    out = unicodedata.normalize("NFKC", text)
    if strip_urls:
        out = _URL_IN_TEXT_RE.sub(" ", out)
    return " ".join(out.split())


@dataclass(frozen=True)
class Account:
    account_id: AccountId
    screen_name: str
    statuses_count: int
    friends_count: int
    followers_count: int
    lang: str
    created_at: datetime

    def __post_init__(self) -> None:
        for name in ("statuses_count", "friends_count", "followers_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_json(self) -> dict[str, Any]:
        """The seven profile fields, keyed the way the API serves them."""
        return {
            "id": self.account_id,
            "screen_name": self.screen_name,
            "statuses_count": self.statuses_count,
            "friends_count": self.friends_count,
            "followers_count": self.followers_count,
            "lang": self.lang,
            "created_at": format_time(self.created_at),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> Account:
        return cls(
            account_id=str(obj["id"]),
            screen_name=str(obj.get("screen_name", "")),
            statuses_count=int(obj.get("statuses_count", 0)),
            friends_count=int(obj.get("friends_count", 0)),
            followers_count=int(obj.get("followers_count", 0)),
            lang=str(obj.get("lang", "")),
            created_at=parse_time(obj["created_at"]),
        )


@dataclass(frozen=True)
class Tweet:
    tweet_id: str
    author: AccountId
    text: str
    created_at: datetime
    embedded_urls: tuple[str, ...] = ()
    user: Account | None = field(default=None, compare=False)

    def to_json(self) -> dict[str, Any]:
        user = self.user.to_json() if self.user else {"id": self.author}
        return {
            "id": self.tweet_id,
            "created_at": format_time(self.created_at),
            "text": self.text,
            "user": user,
            "urls": list(self.embedded_urls),
        }

    def to_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> Tweet:
        try:
            user_obj = obj["user"]
            author = str(user_obj["id"])
            user = Account.from_json(user_obj) if "created_at" in user_obj else None
            urls = obj.get("urls") or []
            if not isinstance(urls, list):
                raise TypeError("urls must be a list")
            return cls(
                tweet_id=str(obj["id"]),
                author=author,
                text=str(obj["text"]),
                created_at=parse_time(obj["created_at"]),
                embedded_urls=tuple(str(u) for u in urls),
                user=user,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad tweet record: {exc}") from exc

    @classmethod
    def from_line(cls, line: str) -> Tweet:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError("tweet record must be a JSON object")
        return cls.from_json(obj)


@dataclass(frozen=True)
class Timeline:
    """The distinct canonical texts among an account's most recent tweets."""

    account: AccountId
    tweets: frozenset[str]
    urls: tuple[str, ...] = ()
    profile: Account | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.tweets:
            raise ValueError(f"empty timeline for {self.account}")
        if len(self.tweets) > 200:
            raise ValueError("timeline holds at most 200 texts")


@dataclass(frozen=True)
class BotGroup:
    group_id: str
    trigger_keyword: str
    members: frozenset[AccountId]
    frequent_tweets: frozenset[str]
    dominant_url: Url | None
    detected_at: datetime
    alpha_used: int
    beta_used: float
    urls: tuple[str, ...] = ()

    def report(self, candidate_size: int | None = None) -> dict[str, Any]:
        return {
            "group_id": self.group_id,
            "keyword": self.trigger_keyword,
            "alpha": self.alpha_used,
            "beta": self.beta_used,
            "member_count": candidate_size if candidate_size is not None else len(self.members),
            "bot_count": len(self.members),
            "frequent_tweet_count": len(self.frequent_tweets),
            "dominant_url": self.dominant_url.geturl() if self.dominant_url else None,
            "detected_at": format_time(self.detected_at),
        }

    def to_json(self) -> dict[str, Any]:
        return {
            "group_id": self.group_id,
            "keyword": self.trigger_keyword,
            "members": sorted(self.members),
            "frequent_tweets": sorted(self.frequent_tweets),
            "dominant_url": self.dominant_url.geturl() if self.dominant_url else None,
            "detected_at": format_time(self.detected_at),
            "alpha": self.alpha_used,
            "beta": self.beta_used,
            "urls": list(self.urls),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> BotGroup:
        dominant = obj.get("dominant_url")
        return cls(
            group_id=obj["group_id"],
            trigger_keyword=obj["keyword"],
            members=frozenset(obj["members"]),
            frequent_tweets=frozenset(obj.get("frequent_tweets", ())),
            dominant_url=extract_netloc(dominant) if dominant else None,
            detected_at=parse_time(obj["detected_at"]),
            alpha_used=int(obj["alpha"]),
            beta_used=float(obj["beta"]),
            urls=tuple(obj.get("urls", ())),
        )
