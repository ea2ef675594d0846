"""Duplicate filter, timeline collection and frequent-set clustering of bot accounts."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Protocol

from .model import (
    AccountId,
    BotGroup,
    MalformedUrl,
    Timeline,
    Tweet,
    Url,
    canonicalize_text,
    extract_netloc,
)

log = logging.getLogger(__name__)

TIMELINE_DEPTH = 200


class AccountUnavailable(LookupError):
    """The provider cannot serve this account (suspended, deleted, private)."""


class NoUrls(ValueError):
    pass


@dataclass(frozen=True)
class DetectionParams:
    alpha: int = 3
    beta: float = 0.6
    min_group_size: int = 20

    def __post_init__(self) -> None:
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        if self.min_group_size < 1:
            raise ValueError("min_group_size must be >= 1")


@dataclass(frozen=True)
class CandidateGroup:
    seed_text: str
    accounts: frozenset[AccountId]

    @property
    def size(self) -> int:
        return len(self.accounts)


class TimelineProvider(Protocol):
    def get_timeline(self, account: AccountId, limit: int = TIMELINE_DEPTH) -> list[Tweet]:
        """Most recent tweets first; raises AccountUnavailable."""
        ...


class ArchiveTimelineProvider:
    """Serves timelines out of an archive of tweets (in memory or a JSON-lines file).

    ``at(when)`` returns a view that hides tweets posted after ``when``.
    """

    def __init__(self, tweets: Iterable[Tweet], unavailable: Iterable[AccountId] = ()):
        self._by_author: dict[AccountId, list[Tweet]] = defaultdict(list)
        for t in tweets:
            self._by_author[t.author].append(t)
        for items in self._by_author.values():
            items.sort(key=lambda t: (t.created_at, t.tweet_id), reverse=True)
        self.unavailable = set(unavailable)
        self.as_of: datetime | None = None

    @classmethod
    def from_file(cls, path: str | Path, unavailable: Iterable[AccountId] = ()) -> ArchiveTimelineProvider:
        with open(path, encoding="utf-8") as fh:
            return cls((Tweet.from_line(line) for line in fh if line.strip()), unavailable)

    def at(self, as_of: datetime | None) -> ArchiveTimelineProvider:
        view = copy.copy(self)
        view.as_of = as_of
        return view

    def get_timeline(self, account: AccountId, limit: int = TIMELINE_DEPTH) -> list[Tweet]:
        if account in self.unavailable or account not in self._by_author:
            raise AccountUnavailable(account)
        items = self._by_author[account]
        if self.as_of is not None:
            items = [t for t in items if t.created_at <= self.as_of]
        return items[:limit]


def group_by_duplicate(tweets: Iterable[Tweet], min_group_size: int = 20,
                       strip_urls: bool = False) -> list[CandidateGroup]:
    """Bucket authors by canonical tweet text; keep buckets with enough distinct authors.

    Groups with identical author sets collapse into one (keyed by the smallest
    text). Output is ordered by size descending, then seed text.
    """
    authors: dict[str, set[AccountId]] = defaultdict(set)
    for t in tweets:
        authors[canonicalize_text(t.text, strip_urls)].add(t.author)
    by_members: dict[frozenset[AccountId], str] = {}
    for text, accts in authors.items():
        if len(accts) < min_group_size:
            continue
        key = frozenset(accts)
        if key not in by_members or text < by_members[key]:
            by_members[key] = text
    groups = [CandidateGroup(text, accts) for accts, text in by_members.items()]
    groups.sort(key=lambda g: (-g.size, g.seed_text))
    return groups


def build_timeline(account: AccountId, tweets: list[Tweet], depth: int = TIMELINE_DEPTH,
                   strip_urls: bool = False) -> Timeline:
    recent = sorted(tweets, key=lambda t: (t.created_at, t.tweet_id), reverse=True)[:depth]
    texts = frozenset(canonicalize_text(t.text, strip_urls) for t in recent)
    urls = tuple(u for t in recent for u in t.embedded_urls)
    profile = next((t.user for t in recent if t.user is not None), None)
    return Timeline(account, texts, urls, profile)


def fetch_timelines(group: CandidateGroup, provider: TimelineProvider,
                    min_group_size: int = 20, depth: int = TIMELINE_DEPTH,
                    max_workers: int = 8, strip_urls: bool = False) -> dict[AccountId, Timeline]:
    """Collect each member's recent timeline. Unavailable accounts are dropped.

    Returns an empty mapping when too few members remain to form a group.
    """
    def one(account: AccountId) -> Timeline | None:
        try:
            tweets = provider.get_timeline(account, depth)
        except AccountUnavailable:
            log.info("account %s unavailable, excluded from group", account)
            return None
        if not tweets:
            return None
        return build_timeline(account, tweets, depth, strip_urls)

    members = sorted(group.accounts)
    if max_workers > 1 and len(members) > 1:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(members))) as pool:
            results = list(pool.map(one, members))
    else:
        results = [one(a) for a in members]
    timelines = {a: tl for a, tl in zip(members, results) if tl is not None}
    if len(timelines) < min_group_size:
        log.info("group %.40r fell below %d accounts after timeline fetch", group.seed_text,
                 min_group_size)
        return {}
    return timelines


def _as_fraction(beta: float) -> Fraction:
    return Fraction(beta).limit_denominator(10**9)


def detect_botnet(timelines: Mapping[AccountId, Timeline] | Mapping[AccountId, frozenset[str]],
                  alpha: int, beta: float) -> tuple[frozenset[str], frozenset[AccountId]]:
    """Return ``(C, S)``: the frequent texts and the accounts dominated by them.

    A text is frequent when at least ``alpha`` accounts hold it. An account is a
    bot when the share of its own distinct texts that are frequent is at least
    ``beta``; the denominator is the account's real timeline size.
    """
    sets = {a: (tl.tweets if isinstance(tl, Timeline) else frozenset(tl))
            for a, tl in timelines.items()}
    holders = Counter(text for texts in sets.values() for text in texts)
    frequent = frozenset(t for t, n in holders.items() if n >= alpha)
    b = _as_fraction(beta)
    bots = frozenset(
        a for a, texts in sets.items()
        if texts and len(texts & frequent) * b.denominator >= b.numerator * len(texts)
    )
    return frequent, bots


def most_frequent(items: Iterable[str]) -> str | None:
    counts = Counter(items)
    if not counts:
        return None
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def dominant_embedded_url(timelines: Iterable[Timeline]) -> Url:
    """The most common full URL across the timelines; ties go to the smaller string."""
    urls = []
    for tl in timelines:
        for raw in tl.urls:
            try:
                extract_netloc(raw)
            except MalformedUrl:
                continue
            urls.append(raw)
    best = most_frequent(urls)
    if best is None:
        raise NoUrls("no embedded URLs in timelines")
    return extract_netloc(best)


def bot_traffic_fraction(tweets: list[Tweet], bots: set[AccountId] | frozenset[AccountId]) -> float:
    """Percentage of ``tweets`` authored by ``bots``."""
    if not tweets:
        raise ValueError("tweets must be non-empty")
    return 100.0 * sum(1 for t in tweets if t.author in bots) / len(tweets)


def make_group_id(keyword: str, detected_at: datetime, seed_text: str) -> str:
    payload = json.dumps([keyword, detected_at.isoformat(), seed_text], ensure_ascii=False)
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Detection:
    """One detected group together with the inputs needed to report on it."""

    group: BotGroup
    candidate: CandidateGroup
    timelines: dict[AccountId, Timeline]

    def report(self) -> dict:
        return self.group.report(candidate_size=self.candidate.size)


def run_detection(tweets: list[Tweet], provider: TimelineProvider, params: DetectionParams,
                  keyword: str, detected_at: datetime, *, depth: int = TIMELINE_DEPTH,
                  max_workers: int = 8, strip_urls: bool = False) -> list[Detection]:
    """Duplicate filter -> timeline collector -> clustering, over one keyword sample.

    Each candidate group is clustered on its own. A candidate whose bots are all
    already covered by an earlier detection is not reported again.
    """
    detections: list[Detection] = []
    covered: set[AccountId] = set()
    for cand in group_by_duplicate(tweets, params.min_group_size, strip_urls):
        timelines = fetch_timelines(cand, provider, params.min_group_size, depth, max_workers,
                                    strip_urls)
        if not timelines:
            continue
        frequent, bots = detect_botnet(timelines, params.alpha, params.beta)
        if not bots or bots <= covered:
            continue
        covered |= bots
        bot_timelines = {a: timelines[a] for a in sorted(bots)}
        try:
            dominant = dominant_embedded_url(bot_timelines.values())
        except NoUrls:
            dominant = None
        urls = sorted({u for tl in bot_timelines.values() for u in tl.urls})
        group = BotGroup(
            group_id=make_group_id(keyword, detected_at, cand.seed_text),
            trigger_keyword=keyword,
            members=bots,
            frequent_tweets=frequent,
            dominant_url=dominant,
            detected_at=detected_at,
            alpha_used=params.alpha,
            beta_used=params.beta,
            urls=tuple(urls),
        )
        detections.append(Detection(group, cand, bot_timelines))
    return detections


def detected_accounts(detections: Iterable[Detection]) -> frozenset[AccountId]:
    out: set[AccountId] = set()
    for d in detections:
        out |= d.group.members
    return frozenset(out)
