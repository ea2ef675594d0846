from __future__ import annotations

from datetime import datetime, timedelta, timezone
from fractions import Fraction

import pytest

from spamwatch.model import Account, Tweet

T0 = datetime(2017, 9, 10, tzinfo=timezone.utc)


def make_account(account_id: str, **kw) -> Account:
    base = dict(screen_name=account_id, statuses_count=10, friends_count=5, followers_count=3,
                lang="en", created_at=T0 - timedelta(days=100))
    base.update(kw)
    return Account(account_id, **base)


def make_tweet(tweet_id: str, author: str, text: str, minutes: float = 0,
               urls: tuple[str, ...] | None = None) -> Tweet:
    if urls is None:
        urls = tuple(w for w in text.split() if w.startswith(("http://", "https://")))
    return Tweet(tweet_id, author, text, T0 + timedelta(minutes=minutes), urls, make_account(author))


def oracle_detect(timelines: dict[str, set[str]], alpha: int, beta) -> tuple[frozenset, frozenset]:
    """Brute force: count holders of every text, then test each account's ratio exactly."""
    all_texts = set()
    for texts in timelines.values():
        all_texts |= texts
    frequent = set()
    for text in all_texts:
        holders = 0
        for texts in timelines.values():
            if text in texts:
                holders += 1
        if holders >= alpha:
            frequent.add(text)
    b = Fraction(str(beta))
    bots = set()
    for account, texts in timelines.items():
        if texts and Fraction(len(texts & frequent), len(texts)) >= b:
            bots.add(account)
    return frozenset(frequent), frozenset(bots)


def oracle_top_k(counts: dict[str, int], k: int) -> list[tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


@pytest.fixture
def three_account_timelines() -> dict[str, set[str]]:
    return {
        "a1": {"t1", "t2", "t3", "t4", "t5"},
        "a2": {"t1", "t2", "t3", "x", "y"},
        "a3": {"t1", "z", "w", "v", "u"},
    }


@pytest.fixture
def three_account_file(tmp_path, three_account_timelines):
    """The three-account example written as a tweet file; every account's t1 carries a link."""
    path = tmp_path / "three.jsonl"
    lines = []
    n = 0
    for account, texts in sorted(three_account_timelines.items()):
        for text in sorted(texts):
            body = f"{text} http://dld.bz/seed" if text == "t1" else text
            lines.append(make_tweet(f"{n:04d}", account, body, minutes=n))
            n += 1
    lines.sort(key=lambda t: t.created_at)
    path.write_text("".join(t.to_line() + "\n" for t in lines))
    return path
