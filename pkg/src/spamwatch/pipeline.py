"""Long-running mode: stream -> trend monitor -> scheduler -> detection workers -> store.

Time is event time. Each tweet advances the clock; jobs fire when the clock
passes their slot and collect the matching tweets from ``(slot - interval, slot]``.
Jobs run on a thread pool with snapshotted inputs, and their results are
committed in submission order so output does not depend on thread timing.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from collections.abc import Callable, Iterable
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

from .campaign import (
    Blacklist,
    BlacklistEntry,
    FakeRegistry,
    WhoisProvider,
    map_campaigns,
    update_blacklist,
)
from .config import Config, ConfigError
from .detector import (
    ArchiveTimelineProvider,
    Detection,
    DetectionParams,
    TimelineProvider,
    detected_accounts,
    run_detection,
)
from .ingest import matches, open_stream
from .model import BotGroup, Tweet
from .resolver import (
    HttpClient,
    NavigationClient,
    ResolvedUrl,
    SyntheticHttpClient,
    SyntheticNavigator,
    SyntheticWeb,
    UrllibHttpClient,
    UrllibNavigator,
    classify_url,
)
from .scheduler import DuplicateKeyword, Job, Schedule
from .store import DetectionStore
from .trend import TrendWindow, load_whitelist

log = logging.getLogger(__name__)

_TICK = timedelta(microseconds=1)


class NullRegistry:
    """Registry that knows no domains; campaign mapping then yields nothing."""

    def query(self, domain: str) -> None:
        return None


def make_clients(web_spec: str | Path | None) -> tuple[HttpClient, NavigationClient]:
    if web_spec:
        web = SyntheticWeb.from_file(web_spec)
        return SyntheticHttpClient(web), SyntheticNavigator(web)
    http = UrllibHttpClient()
    return http, UrllibNavigator(http)


@dataclass
class JobOutcome:
    job: Job
    tweets: int
    bot_tweets: int
    detections: list[Detection]
    resolutions: dict[str, ResolvedUrl] = field(default_factory=dict)


class Pipeline:
    def __init__(self, config: Config, *, store: DetectionStore | None = None,
                 provider: TimelineProvider | None = None, http: HttpClient | None = None,
                 nav: NavigationClient | None = None, whois: WhoisProvider | None = None):
        self.config = config
        self.params = DetectionParams(config.alpha, config.beta, config.min_group_size)
        self.store = store if store is not None else DetectionStore(config.store_path)
        self.provider = provider if provider is not None else self._default_provider()
        if http is None or nav is None:
            http, nav = make_clients(config.web_spec)
        self.http, self.nav = http, nav
        if whois is None:
            whois = FakeRegistry.from_file(config.registry) if config.registry else NullRegistry()
        self.whois = whois
        self.window = TrendWindow(config.top_k, config.window_minutes,
                                  load_whitelist(config.whitelist_path))
        self.schedule: Schedule | None = None
        self.started_at: datetime | None = None
        self.buffer: deque[Tweet] = deque()
        self.pending: deque[Future[JobOutcome]] = deque()
        self.executor = ThreadPoolExecutor(max_workers=config.workers)
        self.botnets: dict[str, BotGroup] = {
            gid: BotGroup.from_json(self.store.group(gid)["botnet"]) for gid in self.store.group_ids()}
        self.resolutions: dict[str, ResolvedUrl] = {}
        self._res_lock = threading.Lock()
        self.blacklist = Blacklist(BlacklistEntry.from_json(e) for e in self.store.blacklist())
        self.last_event: datetime | None = None
        self.tweets_seen = 0
        self.jobs_run = 0
        self.parse_errors = 0
        self.drained = threading.Event()

    def _default_provider(self) -> TimelineProvider:
        cfg = self.config
        source = cfg.timelines or cfg.input
        if not source or "://" in source or source.startswith("gen:"):
            raise ConfigError("run mode needs a timelines archive file")
        return ArchiveTimelineProvider.from_file(source, cfg.unavailable_accounts)

    def status(self) -> dict[str, Any]:
        return {
            "drained": self.drained.is_set(),
            "tweets_seen": self.tweets_seen,
            "jobs_run": self.jobs_run,
            "parse_errors": self.parse_errors,
            "keywords": len(self.schedule) if self.schedule is not None else 0,
            "last_event": self.last_event.isoformat() if self.last_event else None,
        }

    # -- event loop ------------------------------------------------------

    def _start_schedule(self, first: datetime) -> None:
        start = first.astimezone(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)
        self.started_at = start
        self.schedule = Schedule.from_config(self.config.jobs, start)
        self._max_interval = max((j.interval for j in self.schedule.jobs()),
                                 default=self.schedule.default_interval)
        self._max_interval = max(self._max_interval, self.schedule.default_interval)

    def feed(self, tweet: Tweet) -> None:
        """Advance the clock to ``tweet`` and process it."""
        now = tweet.created_at
        if self.schedule is None:
            self._start_schedule(now)
        assert self.schedule is not None
        self._dispatch(self.schedule.due_jobs(now - _TICK))
        self.buffer.append(tweet)
        self.tweets_seen += 1
        self.last_event = now
        for trig in self.window.observe(tweet):
            try:
                self.schedule.add_keyword(trig)
                log.info("trend trigger: now monitoring %s", trig.netloc)
            except DuplicateKeyword:
                pass
        self._dispatch(self.schedule.due_jobs(now))
        horizon = now - self._max_interval
        while self.buffer and self.buffer[0].created_at <= horizon:
            self.buffer.popleft()
        self._commit_ready()

    def run(self, stream: Iterable[Tweet]) -> None:
        speedup = self.config.speedup
        prev: datetime | None = None
        for tweet in stream:
            if speedup and prev is not None:
                gap = (tweet.created_at - prev).total_seconds() / speedup
                if gap > 0:
                    time.sleep(min(gap, 1.0))
            prev = tweet.created_at
            self.feed(tweet)
            self.parse_errors = getattr(stream, "parse_errors", 0)
        self.drain()

    def drain(self) -> None:
        """Run the jobs of the final period, wait for every worker and commit."""
        if self.schedule is not None and self.last_event is not None:
            configured = [j.next_due for j in self.schedule.jobs() if j.origin == "configured"]
            if configured:
                self._dispatch(self.schedule.due_jobs(min(configured)))
        while self.pending:
            self._commit(self.pending.popleft().result())
        self.drained.set()

    def close(self) -> None:
        self.executor.shutdown(wait=True)

    # -- jobs ------------------------------------------------------------

    def _dispatch(self, jobs: list[Job]) -> None:
        for job in jobs:
            slot = job.next_due
            lo = slot - job.interval
            sample = [t for t in self.buffer
                      if lo < t.created_at <= slot and matches(t, job.keyword)]
            sample = sample[:job.tweets_per_run]
            self.pending.append(self.executor.submit(self._run_job, job, sample))

    def _run_job(self, job: Job, tweets: list[Tweet]) -> JobOutcome:
        slot = job.next_due
        provider = self.provider.at(slot) if hasattr(self.provider, "at") else self.provider
        detections = run_detection(
            tweets, provider, self.params, job.keyword, slot,
            depth=self.config.timeline_depth, max_workers=1,
            strip_urls=self.config.strip_urls_before_hash,
        ) if tweets else []
        bots = detected_accounts(detections)
        outcome = JobOutcome(job, len(tweets), sum(t.author in bots for t in tweets), detections)
        for det in detections:
            for url in self._urls_to_resolve(det.group):
                outcome.resolutions[url] = self.resolve(url)
        return outcome

    def _urls_to_resolve(self, group: BotGroup) -> list[str]:
        urls = {group.dominant_url.geturl()} if group.dominant_url else set()
        if self.config.url_policy == "all":
            urls |= set(group.urls)
        return sorted(urls)

    def resolve(self, url: str) -> ResolvedUrl:
        with self._res_lock:
            cached = self.resolutions.get(url)
        if cached is not None:
            return cached
        res = classify_url(url, self.http, self.nav, self.config.max_retry)
        with self._res_lock:
            self.resolutions.setdefault(url, res)
        return res

    def _commit_ready(self) -> None:
        while self.pending and self.pending[0].done():
            self._commit(self.pending.popleft().result())

    def _commit(self, outcome: JobOutcome) -> None:
        job, store = outcome.job, self.store
        slot = job.next_due
        self.jobs_run += 1
        new_ids = []
        for det in outcome.detections:
            group = det.group
            profiles = [tl.profile for tl in det.timelines.values() if tl.profile is not None]
            store.record_botnet(group, profiles, det.report())
            if group.group_id not in self.botnets:
                self.botnets[group.group_id] = group
            new_ids.append(group.group_id)
        with self._res_lock:
            self.resolutions.update(outcome.resolutions)
            resolutions = dict(self.resolutions)
        if new_ids:
            campaigns = map_campaigns(self.botnets.values(), resolutions, self.whois,
                                      self.config.url_policy)
            touched = [c for c in campaigns if set(new_ids) & c.botnets]
            for camp in campaigns:
                if store.campaign(camp.registrant_email) != camp.to_json():
                    store.record_campaign(camp)
            for entry in update_blacklist(self.blacklist, touched, slot, self.whois):
                if store.blacklist_entry(entry.kind, entry.value) != entry.to_json():
                    store.record_blacklist(entry)
        # a window reaching back before the stream began would under-count
        if outcome.tweets and slot - job.interval >= self.started_at:
            day = (slot - _TICK).date().isoformat()
            fraction = 100.0 * outcome.bot_tweets / outcome.tweets
            stat = {"date": day, "keyword": job.keyword, "fraction": round(fraction, 6),
                    "tweets": outcome.tweets, "bot_tweets": outcome.bot_tweets}
            if stat not in store.daily_stats(job.keyword):
                store.record(stat)


def run_from_config(config: Config, serve: bool = True,
                    announce: Callable[[dict[str, Any]], None] | None = None,
                    stop: threading.Event | None = None) -> Pipeline:
    """Run the pipeline over ``config.input``, then keep serving the API until ``stop`` is set.

    ``announce`` receives ``{"event": "listening", ...}`` once the API is up and
    ``{"event": "drained", ...}`` when the input is exhausted.
    """
    from .api import serve_api

    if not config.input:
        raise ConfigError("config needs an input stream")
    announce = announce or (lambda event: None)
    pipeline = Pipeline(config)
    server = None
    try:
        if config.api_port is not None:
            server = serve_api(pipeline.store, config.api_port, config.api_host, pipeline.status)
            if config.port_file:
                Path(config.port_file).write_text(str(server.port))
            announce({"event": "listening", "host": config.api_host, "port": server.port})
        with open_stream(config.input, keyword="http") as stream:
            pipeline.run(stream)
        announce({"event": "drained", **pipeline.status()})
        if serve and server is not None and not config.exit_when_drained:
            (stop or threading.Event()).wait()
    finally:
        if server is not None:
            server.stop()
        pipeline.close()
    return pipeline
