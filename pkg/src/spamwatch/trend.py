"""Windowed top-k netloc counter that fires when a non-whitelisted host starts trending."""

from __future__ import annotations

import threading
from collections.abc import Iterable
from dataclasses import dataclass
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

from .model import MalformedUrl, Tweet, extract_netloc


@dataclass(frozen=True)
class Trigger:
    netloc: str
    count_at_trigger: int
    fired_at: datetime


def parse_whitelist(lines: Iterable[str]) -> frozenset[str]:
    out = set()
    for line in lines:
        entry = line.split("#", 1)[0].strip().lower()
        if entry:
            out.add(entry)
    return frozenset(out)


def load_whitelist(path: str | Path | None = None) -> frozenset[str]:
    """Read a whitelist file; ``None`` loads the packaged default list."""
    if path is None:
        text = resources.files("spamwatch").joinpath("data/whitelist.txt").read_text("utf-8")
        return parse_whitelist(text.splitlines())
    return parse_whitelist(Path(path).read_text("utf-8").splitlines())


def _rank_key(item: tuple[str, int]) -> tuple[int, str]:
    return (-item[1], item[0])


class TrendWindow:
    """Exact netloc counts over a fixed-length window, with an incrementally kept top-k.

    Counts only ever grow inside a window, so when one netloc is incremented the
    sole possible change to the top-k set is that netloc displacing the current
    worst member. That keeps :meth:`observe` at O(k) per URL.
    """

    def __init__(self, k: int = 15, window_minutes: int = 60,
                 whitelist: Iterable[str] | None = None,
                 window_started_at: datetime | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        if window_minutes < 1:
            raise ValueError("window_minutes must be >= 1")
        self.k = k
        self.window_minutes = window_minutes
        self.whitelist = frozenset(w.lower() for w in (whitelist if whitelist is not None else ()))
        self.window_started_at = window_started_at
        self.counts: dict[str, int] = {}
        self._top: set[str] = set()
        self._triggered: set[str] = set()
        self._lock = threading.Lock()

    @property
    def window(self) -> timedelta:
        return timedelta(minutes=self.window_minutes)

    def reset(self, started_at: datetime | None) -> None:
        self.counts = {}
        self._top = set()
        self._triggered = set()
        self.window_started_at = started_at

    def _maybe_roll(self, now: datetime) -> None:
        if self.window_started_at is None:
            self.window_started_at = now
            return
        if now >= self.window_started_at + self.window:
            periods = (now - self.window_started_at) // self.window
            self.reset(self.window_started_at + periods * self.window)

    def _bump(self, netloc: str) -> bool:
        """Increment ``netloc``; return True if it is in the top-k afterwards."""
        count = self.counts.get(netloc, 0) + 1
        self.counts[netloc] = count
        if netloc in self._top:
            return True
        if len(self._top) < self.k:
            self._top.add(netloc)
            return True
        worst = max(self._top, key=lambda n: _rank_key((n, self.counts[n])))
        if _rank_key((netloc, count)) < _rank_key((worst, self.counts[worst])):
            self._top.discard(worst)
            self._top.add(netloc)
            return True
        return False

    def observe(self, tweet: Tweet, now: datetime | None = None) -> list[Trigger]:
        now = now if now is not None else tweet.created_at
        fired: list[Trigger] = []
        with self._lock:
            self._maybe_roll(now)
            for raw in tweet.embedded_urls:
                try:
                    netloc = extract_netloc(raw).netloc
                except MalformedUrl:
                    continue
                if not self._bump(netloc):
                    continue
                if netloc in self.whitelist or netloc in self._triggered:
                    continue
                self._triggered.add(netloc)
                fired.append(Trigger(netloc, self.counts[netloc], now))
        return fired

    def top_k_snapshot(self) -> list[tuple[str, int]]:
        with self._lock:
            items = [(n, self.counts[n]) for n in self._top]
        return sorted(items, key=_rank_key)


def observe(window: TrendWindow, tweet: Tweet, now: datetime | None = None) -> list[Trigger]:
    return window.observe(tweet, now)


def top_k_snapshot(window: TrendWindow) -> list[tuple[str, int]]:
    return window.top_k_snapshot()
