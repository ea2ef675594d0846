"""Fixed-rate detection jobs keyed by search keyword."""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Any, Iterable

from .trend import Trigger

DEFAULT_SHORTENERS = ("bit.ly", "goo.gl", "ow.ly", "tinyurl.com", "dlvr.it", "ift.tt", "dld.bz")
DEFAULT_INTERVAL = timedelta(hours=24)
DEFAULT_TWEETS_PER_RUN = 30_000


class DuplicateKeyword(Exception):
    """The keyword is already scheduled; adding it again changes nothing."""

    def __init__(self, keyword: str):
        super().__init__(f"keyword already scheduled: {keyword}")
        self.keyword = keyword


@dataclass
class Job:
    keyword: str
    interval: timedelta
    next_due: datetime
    tweets_per_run: int = DEFAULT_TWEETS_PER_RUN
    origin: str = "configured"

    def __post_init__(self) -> None:
        if self.interval <= timedelta(0):
            raise ValueError("interval must be positive")
        if self.tweets_per_run < 1:
            raise ValueError("tweets_per_run must be >= 1")


class Schedule:
    def __init__(self, jobs: Iterable[Job] = (), default_interval: timedelta = DEFAULT_INTERVAL,
                 default_tweets_per_run: int = DEFAULT_TWEETS_PER_RUN):
        self.default_interval = default_interval
        self.default_tweets_per_run = default_tweets_per_run
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        for job in jobs:
            if job.keyword in self._jobs:
                raise DuplicateKeyword(job.keyword)
            self._jobs[job.keyword] = job

    @classmethod
    def from_config(cls, entries: Iterable[dict[str, Any]] | None, start: datetime) -> Schedule:
        """Build configured jobs, each first due one interval after ``start``.

        ``entries`` items look like ``{"keyword", "interval_hours", "tweets_per_run"}``;
        ``None`` selects the seven default shorteners at 24h / 30,000 tweets.
        """
        if entries is None:
            entries = [{"keyword": k} for k in DEFAULT_SHORTENERS]
        jobs = []
        for e in entries:
            interval = timedelta(hours=float(e.get("interval_hours", 24)))
            jobs.append(Job(
                keyword=e["keyword"],
                interval=interval,
                next_due=start + interval,
                tweets_per_run=int(e.get("tweets_per_run", DEFAULT_TWEETS_PER_RUN)),
            ))
        return cls(jobs)

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._jobs

    def __len__(self) -> int:
        return len(self._jobs)

    def jobs(self) -> list[Job]:
        with self._lock:
            return [replace(j) for j in sorted(self._jobs.values(), key=lambda j: j.keyword)]

    def due_jobs(self, now: datetime) -> list[Job]:
        """Return snapshots of every job due at ``now`` and advance them on their grid.

        A job polled late runs once, and its next slot is the first grid point
        strictly after ``now``: due 100, polled 250, interval 100 -> next 300.
        The returned snapshot carries the slot it ran for in ``next_due``.
        """
        due = []
        with self._lock:
            for job in self._jobs.values():
                if job.next_due > now:
                    continue
                due.append(replace(job))
                missed = (now - job.next_due) // job.interval
                job.next_due += (missed + 1) * job.interval
        due.sort(key=lambda j: (j.next_due, j.keyword))
        return due

    def add_keyword(self, trigger: Trigger) -> Job:
        with self._lock:
            if trigger.netloc in self._jobs:
                raise DuplicateKeyword(trigger.netloc)
            job = Job(
                keyword=trigger.netloc,
                interval=self.default_interval,
                next_due=trigger.fired_at,
                tweets_per_run=self.default_tweets_per_run,
                origin="trend-trigger",
            )
            self._jobs[job.keyword] = job
            return replace(job)

    def next_due(self) -> datetime | None:
        with self._lock:
            return min((j.next_due for j in self._jobs.values()), default=None)


def due_jobs(schedule: Schedule, now: datetime) -> list[Job]:
    return schedule.due_jobs(now)


def add_keyword(schedule: Schedule, trigger: Trigger) -> Job:
    return schedule.add_keyword(trigger)
