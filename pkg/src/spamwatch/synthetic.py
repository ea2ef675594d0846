"""Ground-truth worlds: tweet streams with planted botnets, a scripted web, a fake registry.

Two botnet mechanisms are modelled:

* ``traditional`` -- accounts registered in one batch by one operator. Profiles
  are drawn tightly around shared means and creation times fall in a narrow
  window. Timelines are almost entirely the botnet's duplicate spam texts.
* ``hijacked`` -- legitimate accounts co-opted through a third-party app.
  Profiles are spread over orders of magnitude and creation times over years.
  Timelines mix the owner's own tweets, tagging tweets that mention random
  followers, and the injected spam texts.

Everything is drawn from one ``random.Random(seed)``, so a spec always yields
byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import string
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

from .campaign import FakeRegistry, registrable_domain
from .detector import (
    ArchiveTimelineProvider,
    TIMELINE_DEPTH,
    TimelineProvider,
    detect_botnet,
    fetch_timelines,
    group_by_duplicate,
)
from .model import Account, AccountId, BotGroup, Timeline, Tweet, extract_netloc, format_time, parse_time
from .resolver import SyntheticWeb

DEFAULT_START = datetime(2017, 9, 10, tzinfo=timezone.utc)

_TOPICS = ["crypto", "weight loss", "celebrity", "election", "giveaway", "iphone", "recipe",
           "football", "stocks", "travel", "gaming", "fashion", "health", "movies", "music"]
_HOOKS = ["You won't believe", "Shocking news about", "Best deal on", "Exclusive:",
          "Breaking:", "Everyone is talking about", "Top 10 secrets of", "Limited offer on"]
_WORDS = ["morning", "coffee", "meeting", "weekend", "project", "garden", "concert", "sunset",
          "lecture", "train", "dinner", "family", "deadline", "library", "workout", "podcast",
          "article", "review", "holiday", "traffic", "rain", "puppy", "match", "launch"]
_LANGS = ["en", "en", "en", "es", "pt", "ar", "tr", "fr", "ja"]


@dataclass
class BotnetSpec:
    mechanism: str = "traditional"
    size: int = 20
    tweets_per_account: int = 1
    """Spam tweets each member posts per day."""
    duplicate_texts: int = 30
    text_period_days: int = 3
    """Days each spam text stays in rotation before the next one takes over."""
    shortener: str = "dld.bz"
    landing_domain: str = "landing.example"
    behavior: str = "phishing"
    """``phishing``, ``secret`` or ``safe``: what the landing site does in a browser."""
    registrant: str = "operator@example.com"
    history_days: int = 9
    """Days of activity before the scenario starts (present in timelines only)."""
    filler_tweets: tuple[int, int] = (0, 2)
    """Range of unique non-spam tweets per traditional bot."""
    spam_share: tuple[float, float] = (0.7, 0.9)
    """Range of per-account spam share at scenario start (hijacked only)."""
    tagging_fraction: float = 0.4
    """Share of a hijacked account's non-spam tweets that tag a follower."""
    redirect_hops: int = 1
    dominant_share: float = 0.9
    batch_hours: float = 24.0

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("botnet size must be >= 1")
        if self.mechanism not in ("traditional", "hijacked"):
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.behavior not in ("phishing", "secret", "safe"):
            raise ValueError(f"unknown behavior {self.behavior!r}")
        self.filler_tweets = tuple(self.filler_tweets)
        self.spam_share = tuple(self.spam_share)


@dataclass
class ScenarioSpec:
    seed: int = 7
    human_accounts: int = 2000
    botnets: list[BotnetSpec] = field(default_factory=list)
    duration_days: int = 14
    bot_traffic_share: float = 0.3
    start: datetime = DEFAULT_START
    bystanders: int = 10
    """Humans who repost one bot text verbatim (innocent duplicates)."""
    human_history: tuple[int, int] = (10, 40)
    dormant_domains: int = 3
    """Extra never-used domains registered under each botnet registrant."""
    unavailable_accounts: int = 0
    """Humans whose timelines the provider refuses to serve."""

    def __post_init__(self) -> None:
        self.botnets = [b if isinstance(b, BotnetSpec) else BotnetSpec(**b) for b in self.botnets]
        self.start = parse_time(self.start)
        self.human_history = tuple(self.human_history)
        if not 0 < self.bot_traffic_share < 1:
            raise ValueError("bot_traffic_share must be in (0, 1)")

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["start"] = format_time(self.start)
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ScenarioSpec:
        return cls(**obj)

    @classmethod
    def from_file(cls, path: str | Path) -> ScenarioSpec:
        return cls.from_json(json.loads(Path(path).read_text("utf-8")))


def default_scenario(seed: int = 7, duration_days: int = 14) -> ScenarioSpec:
    """Five batch-registered botnets (20-60 accounts), two hijacked (30 each), 2000 humans."""
    op_a, op_b = "giuseppe.m@mailbox.example", "chris.matthew@mailbox.example"
    botnets = [
        BotnetSpec("traditional", 20, shortener="dld.bz", landing_domain="savingzev.feedsted.us",
                   behavior="phishing", registrant=op_a),
        BotnetSpec("traditional", 30, shortener="bit.ly", landing_domain="savingzev.renewsfeed.us",
                   behavior="phishing", registrant=op_a),
        BotnetSpec("traditional", 40, shortener="ow.ly", landing_domain="savingzev.qualifystory.us",
                   behavior="phishing", registrant=op_a),
        BotnetSpec("traditional", 50, shortener="tinyurl.com", landing_domain="vidisp.review",
                   behavior="secret", registrant=op_b),
        BotnetSpec("traditional", 60, shortener="dlvr.it", landing_domain="likelisi.club",
                   behavior="secret", registrant=op_b, redirect_hops=2),
        BotnetSpec("hijacked", 30, shortener="twitbr.tk", landing_domain="twitbr.tk",
                   behavior="phishing", registrant="admin@twits.example"),
        BotnetSpec("hijacked", 30, shortener="goo.gl", landing_domain="viraltt.tk",
                   behavior="phishing", registrant="admin@twits.example"),
    ]
    return ScenarioSpec(seed=seed, human_accounts=2000, botnets=botnets,
                        duration_days=duration_days, bot_traffic_share=0.3)


# --------------------------------------------------------------------------
# world


@dataclass
class PlantedBotnet:
    index: int
    mechanism: str
    members: list[AccountId]
    shortener: str
    landing_domain: str
    behavior: str
    registrant: str
    dominant_url: str
    spam_texts: list[str]

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class World:
    spec: ScenarioSpec
    accounts: dict[AccountId, Account]
    stream: list[Tweet]
    history: list[Tweet]
    botnets: list[PlantedBotnet]
    humans: list[AccountId]
    bystanders: list[AccountId]
    unavailable: list[AccountId]
    web: SyntheticWeb
    registry: FakeRegistry

    @property
    def bot_accounts(self) -> frozenset[AccountId]:
        return frozenset(a for b in self.botnets for a in b.members)

    def archive(self) -> list[Tweet]:
        return sorted(self.history + self.stream, key=lambda t: (t.created_at, t.tweet_id))

    def provider(self) -> SyntheticTimelineProvider:
        return SyntheticTimelineProvider(self.archive(), self.unavailable)

    def day_bounds(self, day: int) -> tuple[datetime, datetime]:
        lo = self.spec.start + timedelta(days=day)
        return lo, lo + timedelta(days=1)

    def stream_for_day(self, day: int, keyword: str | None = None) -> list[Tweet]:
        lo, hi = self.day_bounds(day)
        kw = keyword.lower() if keyword else None
        return [t for t in self.stream
                if lo <= t.created_at < hi and (kw is None or kw in t.text.lower())]

    def keywords(self) -> list[str]:
        return sorted({b.shortener for b in self.botnets})

    def true_fraction(self, day: int, keyword: str) -> float:
        tweets = self.stream_for_day(day, keyword)
        bots = self.bot_accounts
        return 100.0 * sum(t.author in bots for t in tweets) / len(tweets) if tweets else 0.0

    def truth(self) -> dict[str, Any]:
        days = {}
        for d in range(self.spec.duration_days):
            day = (self.spec.start + timedelta(days=d)).date().isoformat()
            days[day] = {k: round(self.true_fraction(d, k), 6) for k in self.keywords()}
        return {
            "botnets": [b.to_json() for b in self.botnets],
            "humans": len(self.humans),
            "bystanders": self.bystanders,
            "unavailable": self.unavailable,
            "daily_bot_fraction": days,
        }


class SyntheticTimelineProvider(ArchiveTimelineProvider):
    """Timeline provider over a generated archive; use ``at(when)`` for point-in-time views."""


def _code(rng: random.Random, n: int = 6) -> str:
    return "".join(rng.choice(string.ascii_letters + string.digits) for _ in range(n))


def _log_uniform(rng: random.Random, lo: float, hi: float) -> int:
    return int(round(10 ** rng.uniform(math.log10(lo), math.log10(hi))))


def _traditional_profiles(rng: random.Random, spec: BotnetSpec, idx: int,
                          start: datetime) -> list[Account]:
    mu_s, mu_fr, mu_fo = rng.uniform(200, 2000), rng.uniform(100, 1000), rng.uniform(20, 400)
    batch_start = start - timedelta(days=rng.uniform(1.0, 3.0))
    out = []
    for j in range(spec.size):
        out.append(Account(
            account_id=f"b{idx:02d}_{j:04d}",
            screen_name=f"{rng.choice(_WORDS)}{rng.choice(_TOPICS).replace(' ', '')}{rng.randint(10, 9999)}",
            statuses_count=max(0, int(rng.gauss(mu_s, 0.02 * mu_s))),
            friends_count=max(0, int(rng.gauss(mu_fr, 0.02 * mu_fr))),
            followers_count=max(0, int(rng.gauss(mu_fo, 0.02 * mu_fo))),
            lang="en",
            created_at=batch_start + timedelta(hours=rng.uniform(0, spec.batch_hours)),
        ))
    return out


def _wide_profile(rng: random.Random, account_id: str, start: datetime,
                  created: datetime | None = None) -> Account:
    if created is None:
        created = start - timedelta(days=rng.uniform(180, 9 * 365))
    return Account(
        account_id=account_id,
        screen_name=f"{rng.choice(_WORDS)}_{rng.choice(_WORDS)}{rng.randint(1, 999)}",
        statuses_count=_log_uniform(rng, 10, 50_000),
        friends_count=_log_uniform(rng, 10, 5_000),
        followers_count=_log_uniform(rng, 10, 10_000),
        lang=rng.choice(_LANGS),
        created_at=created,
    )


def _hijacked_profiles(rng: random.Random, spec: BotnetSpec, idx: int,
                       start: datetime) -> list[Account]:
    earliest, latest = start - timedelta(days=9 * 365), start - timedelta(days=180)
    out = []
    for j in range(spec.size):
        created = None
        # pin the extremes so the creation-time spread always covers years
        if spec.size >= 2 and j == 0:
            created = earliest + timedelta(days=rng.uniform(0, 30))
        elif spec.size >= 2 and j == 1:
            created = latest - timedelta(days=rng.uniform(0, 30))
        out.append(_wide_profile(rng, f"b{idx:02d}_{j:04d}", start, created))
    return out


class _Builder:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.stream: list[tuple[datetime, AccountId, str, tuple[str, ...]]] = []
        self.history: list[tuple[datetime, AccountId, str, tuple[str, ...]]] = []
        self.accounts: dict[AccountId, Account] = {}
        self.web = SyntheticWeb()
        self.registry: dict[str, dict[str, Any]] = {}
        self.unique = 0

    def uid(self) -> int:
        self.unique += 1
        return self.unique

    def day_time(self, day: int) -> datetime:
        return self.spec.start + timedelta(days=day, seconds=self.rng.uniform(1, 86_399))

    def build_links(self, idx: int, b: BotnetSpec) -> tuple[str, list[str]]:
        """Register the botnet's landing site and shortened links; return (dominant, alternates)."""
        rng = self.rng
        landing = b.landing_domain.lower()
        direct = b.shortener.lower() == landing

        def landing_path() -> str:
            return f"/client/{_code(rng, 5)}/{_code(rng, 5)}/{_code(rng, 4)}"

        if b.behavior == "phishing":
            malware = f"malware{idx}.example"
            self.web.add(landing, client_redirect=f"http://{malware}/")
            self.web.add(malware, page="<html>adware</html>")
        elif b.behavior == "secret":
            spam = f"spam{idx}.example"
            self.web.add(f"{landing}/", client_redirect="http://google.com/")
            self.web.add(f"{landing}/*", client_redirect=f"http://{spam}/offer")
            self.web.add(spam, page="<html>spam</html>")
            self.web.add("google.com", page="<html>search</html>")
        else:
            self.web.add(landing, page="<html>content</html>")

        links = []
        for _ in range(4):
            target = f"http://{landing}{landing_path()}"
            if direct:
                links.append(target)
                continue
            src = f"http://{b.shortener}/{_code(rng)}"
            hop_src = src
            for h in range(b.redirect_hops - 1):
                mid = f"http://{b.shortener}/r{h}{_code(rng, 8)}"
                self.web.add(hop_src.split("://", 1)[1], server_redirect=mid)
                hop_src = mid
            self.web.add(hop_src.split("://", 1)[1], server_redirect=target)
            links.append(src)
        reg = registrable_domain(landing)
        self.registry.setdefault(reg, {"email": b.registrant, "name": b.registrant.split("@")[0],
                                       "created_on": (self.spec.start - timedelta(days=1)).date().isoformat()})
        return links[0], links[1:]

    def spam_texts(self, idx: int, b: BotnetSpec, dominant: str, alternates: list[str]) -> list[str]:
        rng = self.rng
        texts = []
        for j in range(b.duplicate_texts):
            url = dominant if rng.random() < b.dominant_share else rng.choice(alternates)
            texts.append(f"{rng.choice(_HOOKS)} {rng.choice(_TOPICS)} #{idx}{j} {url}")
        return texts

    def text_for(self, b: BotnetSpec, texts: list[str], day: int, slot: int) -> str:
        period = (day + b.history_days) // b.text_period_days
        return texts[(period * b.tweets_per_account + slot) % len(texts)]

    def add_botnet(self, idx: int, b: BotnetSpec) -> PlantedBotnet:
        rng = self.rng
        start = self.spec.start
        if b.mechanism == "traditional":
            profiles = _traditional_profiles(rng, b, idx, start)
        else:
            profiles = _hijacked_profiles(rng, b, idx, start)
        for p in profiles:
            self.accounts[p.account_id] = p
        dominant, alternates = self.build_links(idx, b)
        texts = self.spam_texts(idx, b, dominant, alternates)
        members = [p.account_id for p in profiles]

        for a in members:
            # pre-scenario spam, visible in timelines only
            spam_before = set()
            for d in range(-b.history_days, 0):
                for s in range(b.tweets_per_account):
                    text = self.text_for(b, texts, d, s)
                    spam_before.add(text)
                    self.history.append((self.day_time(d), a, text, _urls(text)))
            first_day = {self.text_for(b, texts, 0, s) for s in range(b.tweets_per_account)}
            n_spam0 = len(spam_before | first_day)
            if b.mechanism == "traditional":
                n_other = rng.randint(*b.filler_tweets)
                n_tags = 0
            else:
                share = rng.uniform(*b.spam_share)
                n_nonspam = int(round(n_spam0 * (1 - share) / share))
                n_tags = int(round(n_nonspam * b.tagging_fraction))
                n_other = n_nonspam - n_tags
            for _ in range(n_other):
                when = start - timedelta(days=rng.uniform(b.history_days + 1, b.history_days + 60))
                self.history.append((when, a, self.human_text(), ()))
            for _ in range(n_tags):
                when = start - timedelta(days=rng.uniform(0.1, b.history_days))
                friend = f"{rng.choice(_WORDS)}{rng.randint(1, 99999)}"
                self.history.append((when, a, f"@{friend} check this out {_code(rng, 8)}", ()))
            for d in range(self.spec.duration_days):
                for s in range(b.tweets_per_account):
                    text = self.text_for(b, texts, d, s)
                    self.stream.append((self.day_time(d), a, text, _urls(text)))
        return PlantedBotnet(idx, b.mechanism, members, b.shortener, b.landing_domain, b.behavior,
                             b.registrant, dominant, texts)

    def human_text(self, url: str | None = None) -> str:
        rng = self.rng
        words = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(3, 7)))
        text = f"{words} ~{self.uid()}"
        return f"{text} {url}" if url else text

    def add_humans(self, planted: list[PlantedBotnet]) -> tuple[list[AccountId], list[AccountId], list[AccountId]]:
        rng, spec = self.rng, self.spec
        humans = [f"u{i:05d}" for i in range(spec.human_accounts)]
        for h in humans:
            self.accounts[h] = _wide_profile(rng, h, spec.start)
            for _ in range(rng.randint(*spec.human_history)):
                when = spec.start - timedelta(days=rng.uniform(0.5, 120))
                self.history.append((when, h, self.human_text(), ()))
        if not humans:
            return humans, [], []

        # per shortener per day, human volume that puts bots at the target share
        bot_volume: Counter[tuple[int, str]] = Counter()
        for when, author, _, urls in self.stream:
            if urls:
                day = (when - spec.start).days
                bot_volume[(day, _shortener_of(urls[0], planted))] += 1
        share = spec.bot_traffic_share
        for (day, shortener), n_bot in sorted(bot_volume.items()):
            n_human = int(round(n_bot * (1 - share) / share))
            for _ in range(n_human):
                author = rng.choice(humans)
                url = f"http://{shortener}/h{self.uid()}"
                urls = [url]
                roll = rng.random()
                if roll < 0.1:
                    urls.append(f"https://twitter.com/i/status/{self.uid()}")
                elif roll < 0.4:
                    urls.append(f"http://news{rng.randint(0, 199)}.example.com/{self.uid()}")
                text = self.human_text(" ".join(urls))
                self.stream.append((self.day_time(day), author, text, tuple(urls)))

        pool = [h for h in humans]
        rng.shuffle(pool)
        bystanders = sorted(pool[:min(spec.bystanders, len(pool))])
        unavailable = sorted(pool[len(bystanders):len(bystanders) + spec.unavailable_accounts])
        for i, h in enumerate(bystanders):
            if not planted:
                break
            b = planted[i % len(planted)]
            bspec = spec.botnets[b.index]
            day = rng.randrange(spec.duration_days)
            text = self.text_for(bspec, b.spam_texts, day, 0)
            self.stream.append((self.day_time(day), h, text, _urls(text)))
        return humans, bystanders, unavailable

    def add_dormant(self, planted: list[PlantedBotnet]) -> None:
        rng = self.rng
        for email in sorted({b.registrant for b in planted}):
            for _ in range(self.spec.dormant_domains):
                dom = f"{rng.choice(['best', 'awesome', 'news', 'daily'])}{_code(rng, 5).lower()}.club"
                self.registry.setdefault(dom, {"email": email, "name": email.split("@")[0],
                                               "created_on": self.spec.start.date().isoformat()})

    def finish(self, planted, humans, bystanders, unavailable) -> World:
        def materialize(rows, prefix: str) -> list[Tweet]:
            rows = sorted(rows, key=lambda r: (r[0], r[1], r[2]))
            return [Tweet(f"{prefix}{i:08d}", author, text, when.replace(microsecond=0), urls,
                          self.accounts[author])
                    for i, (when, author, text, urls) in enumerate(rows)]

        return World(
            spec=self.spec,
            accounts=self.accounts,
            stream=materialize(self.stream, "t"),
            history=materialize(self.history, "h"),
            botnets=planted,
            humans=humans,
            bystanders=bystanders,
            unavailable=unavailable,
            web=self.web,
            registry=FakeRegistry(self.registry),
        )


def _urls(text: str) -> tuple[str, ...]:
    return tuple(w for w in text.split() if w.startswith(("http://", "https://")))


def _shortener_of(url: str, planted: list[PlantedBotnet]) -> str:
    host = url.split("://", 1)[1].split("/", 1)[0]
    for b in planted:
        if b.shortener == host:
            return host
    return host


def generate_world(spec: ScenarioSpec) -> World:
    """Build the full synthetic world for ``spec``."""
    builder = _Builder(spec)
    planted = [builder.add_botnet(i, b) for i, b in enumerate(spec.botnets)]
    humans, bystanders, unavailable = builder.add_humans(planted)
    builder.add_dormant(planted)
    return builder.finish(planted, humans, bystanders, unavailable)


def _single_botnet(spec: BotnetSpec, seed: int, start: datetime) -> tuple[list[Account], list[Tweet]]:
    world = generate_world(ScenarioSpec(seed=seed, human_accounts=0, botnets=[spec],
                                        duration_days=1, bystanders=0, start=start,
                                        dormant_domains=0))
    accounts = [world.accounts[a] for a in world.botnets[0].members]
    return accounts, world.archive()


def generate_traditional_botnet(spec: BotnetSpec, seed: int = 0,
                                start: datetime = DEFAULT_START) -> tuple[list[Account], list[Tweet]]:
    if spec.mechanism != "traditional":
        spec = BotnetSpec(**{**asdict(spec), "mechanism": "traditional"})
    return _single_botnet(spec, seed, start)


def generate_hijacked_botnet(spec: BotnetSpec, seed: int = 0,
                             start: datetime = DEFAULT_START) -> tuple[list[Account], list[Tweet]]:
    if spec.mechanism != "hijacked":
        spec = BotnetSpec(**{**asdict(spec), "mechanism": "hijacked"})
    return _single_botnet(spec, seed, start)


def write_world(world: World, out: str | Path) -> dict[str, str]:
    """Write the world as files and return their paths, including a ready-to-run config."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "scenario": out / "scenario.json",
        "stream": out / "stream.jsonl",
        "archive": out / "archive.jsonl",
        "web": out / "web.json",
        "registry": out / "registry.json",
        "truth": out / "truth.json",
        "config": out / "config.json",
    }
    paths["scenario"].write_text(json.dumps(world.spec.to_json(), indent=1, sort_keys=True) + "\n")
    with paths["stream"].open("w", encoding="utf-8") as fh:
        for t in world.stream:
            fh.write(t.to_line() + "\n")
    with paths["archive"].open("w", encoding="utf-8") as fh:
        for t in world.archive():
            fh.write(t.to_line() + "\n")
    world.web.save(paths["web"])
    world.registry.save(paths["registry"])
    paths["truth"].write_text(json.dumps(world.truth(), indent=1, sort_keys=True) + "\n")
    config = {
        "input": str(paths["stream"]),
        "timelines": str(paths["archive"]),
        "unavailable_accounts": world.unavailable,
        "web_spec": str(paths["web"]),
        "registry": str(paths["registry"]),
        "store_path": str(out / "store.jsonl"),
        "jobs": [{"keyword": k, "interval_hours": 24, "tweets_per_run": 30000}
                 for k in sorted({b.shortener for b in world.botnets} - {"twitbr.tk"})],
    }
    paths["config"].write_text(json.dumps(config, indent=1, sort_keys=True) + "\n")
    return {k: str(v) for k, v in paths.items()}


# --------------------------------------------------------------------------
# synthetic web archetypes


def build_synthetic_web(chain_depth: int = 7) -> SyntheticWeb:
    """The four reference site archetypes plus the hosts they redirect to.

    * ``http://safe.example/article`` -- static page.
    * ``http://chain.example/hop/0`` -- ``chain_depth`` consecutive 301s, then a page.
    * ``http://phish.example/promo`` -- every path client-redirects to ``malware.example``.
    * ``http://vidisp.review/client/bqY8G/e57Nx/avg30/1VvQj`` -- the bare host goes to
      ``google.com``, deep paths go to ``spam.example``.
    """
    web = SyntheticWeb()
    web.add("safe.example", page="<html>news</html>")
    for i in range(chain_depth):
        web.add(f"chain.example/hop/{i}", server_redirect=f"http://chain.example/hop/{i + 1}")
    web.add(f"chain.example/hop/{chain_depth}", page="<html>end of chain</html>")
    web.add("phish.example", client_redirect="http://malware.example/")
    web.add("malware.example", page="<html>malware</html>")
    web.add("vidisp.review/", client_redirect="http://google.com/")
    web.add("vidisp.review/*", client_redirect="http://spam.example/offer")
    web.add("spam.example", page="<html>spam</html>")
    web.add("google.com", page="<html>search</html>")
    return web


ARCHETYPE_URLS = {
    "safe": "http://safe.example/article",
    "chain": "http://chain.example/hop/0",
    "phishing": "http://phish.example/promo",
    "secret": "http://vidisp.review/client/bqY8G/e57Nx/avg30/1VvQj",
}


def random_web(rng: random.Random, n_hosts: int = 6) -> tuple[SyntheticWeb, list[str]]:
    """A random site spec and a few URLs into it, for property tests."""
    hosts = [f"h{i}.example" for i in range(n_hosts)]
    web = SyntheticWeb()
    for h in hosts:
        for pat in (f"{h}/", f"{h}/*"):
            kind = rng.choice(["page", "server", "client", "client", "server"])
            target = f"http://{rng.choice(hosts)}/{rng.choice(['', 'p', 'q/r'])}"
            if kind == "page":
                web.add(pat, page="x")
            elif kind == "server":
                web.add(pat, server_redirect=target)
            else:
                web.add(pat, client_redirect=target)
    urls = [f"http://{rng.choice(hosts)}/{rng.choice(['', 'a', 'a/b', 'x?y=1'])}" for _ in range(3)]
    return web, urls


# --------------------------------------------------------------------------
# evaluation


@dataclass
class Evaluation:
    precision: float
    recall: float
    precision_defined: bool
    true_positives: int
    false_positives: int
    false_negatives: int
    human_false_positives: int
    unique_human_false_positives: int
    per_group_f1: dict[int, float]

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["per_group_f1"] = {str(k): v for k, v in self.per_group_f1.items()}
        return out


def _f1(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    tp = len(a & b)
    return 2 * tp / (len(a) + len(b)) if (a or b) else 0.0


def evaluate(detected: Iterable[BotGroup] | Iterable[AccountId],
             world: World | ScenarioSpec) -> Evaluation:
    """Account-level precision / recall against planted labels.

    A bare ``ScenarioSpec`` is expanded with :func:`generate_world` first.

    With nothing detected, precision is reported as 1.0 and
    ``precision_defined`` is False.
    """
    if isinstance(world, ScenarioSpec):
        world = generate_world(world)
    groups: list[set[AccountId]] = []
    flagged: set[AccountId] = set()
    for item in detected:
        if isinstance(item, BotGroup):
            groups.append(set(item.members))
            flagged |= item.members
        else:
            flagged.add(item)
    truth = set(world.bot_accounts)
    tp = len(flagged & truth)
    fp = len(flagged - truth)
    fn = len(truth - flagged)
    humans = set(world.humans)
    unique_humans = humans - set(world.bystanders)
    per_group = {}
    for b in world.botnets:
        members = set(b.members)
        per_group[b.index] = max((_f1(members, g) for g in groups), default=0.0) if groups else (
            _f1(members, flagged & members) if flagged else 0.0)
    return Evaluation(
        precision=tp / len(flagged) if flagged else 1.0,
        recall=tp / len(truth) if truth else 1.0,
        precision_defined=bool(flagged),
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        human_false_positives=len(flagged & humans),
        unique_human_false_positives=len(flagged & unique_humans),
        per_group_f1=per_group,
    )


# --------------------------------------------------------------------------
# parameter sweep


@dataclass
class SweepResult:
    alphas: list[int]
    betas: list[float]
    counts: dict[tuple[int, float], int]

    def curve_alpha(self, beta: float) -> list[int]:
        return [self.counts[(a, beta)] for a in self.alphas]

    def curve_beta(self, alpha: int) -> list[int]:
        return [self.counts[(alpha, b)] for b in self.betas]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "beta", "bot_count"])
        for a in self.alphas:
            for b in self.betas:
                w.writerow([a, f"{b:g}", self.counts[(a, b)]])
        return buf.getvalue()

    def elbow_report(self, alpha: int = 3, beta: float = 0.6, plateau_tol: float = 0.1) -> dict[str, Any]:
        fixed_beta = beta if beta in self.betas else self.betas[len(self.betas) // 2]
        fixed_alpha = alpha if alpha in self.alphas else self.alphas[len(self.alphas) // 2]
        a_curve = self.curve_alpha(fixed_beta)
        b_curve = self.curve_beta(fixed_alpha)
        return {
            "defaults": {"alpha": alpha, "beta": beta},
            "alpha_sweep": {
                "beta": fixed_beta,
                "alphas": self.alphas,
                "bot_counts": a_curve,
                "largest_drop": largest_drop(self.alphas, a_curve),
                "plateau_onset": plateau_onset(self.alphas, a_curve, plateau_tol),
            },
            "beta_sweep": {
                "alpha": fixed_alpha,
                "betas": self.betas,
                "bot_counts": b_curve,
                "largest_drop": largest_drop(self.betas, b_curve),
                "plateau_onset": plateau_onset(self.betas, b_curve, plateau_tol),
            },
        }


def largest_drop(values: Sequence[Any], counts: Sequence[int]) -> dict[str, Any] | None:
    """The consecutive pair with the biggest decrease; earliest pair wins ties."""
    best = None
    for i in range(len(values) - 1):
        drop = counts[i] - counts[i + 1]
        if best is None or drop > best["drop"]:
            best = {"from": values[i], "to": values[i + 1], "drop": drop}
    return best


def plateau_onset(values: Sequence[Any], counts: Sequence[int], tol: float = 0.1) -> Any:
    """First grid value after which every step decreases by at most ``tol`` of the total decrease."""
    if not values:
        return None
    total = counts[0] - counts[-1]
    limit = tol * total
    for i in range(len(values)):
        if all(counts[j] - counts[j + 1] <= limit for j in range(i, len(values) - 1)):
            return values[i]
    return values[-1]


def frange(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def sweep(tweets: list[Tweet], provider: TimelineProvider, alphas: Iterable[int],
          betas: Iterable[float], min_group_size: int = 20, depth: int = TIMELINE_DEPTH,
          strip_urls: bool = False) -> SweepResult:
    """Bot count (union over candidate groups) for every (alpha, beta) pair."""
    alphas, betas = sorted(set(alphas)), sorted(set(betas))
    if not alphas or not betas:
        raise ValueError("sweep ranges must be non-empty")
    groups: list[dict[AccountId, Timeline]] = []
    for cand in group_by_duplicate(tweets, min_group_size, strip_urls):
        tl = fetch_timelines(cand, provider, min_group_size, depth, max_workers=1,
                             strip_urls=strip_urls)
        if tl:
            groups.append(tl)
    counts = {}
    for a in alphas:
        for b in betas:
            bots: set[AccountId] = set()
            for tl in groups:
                bots |= detect_botnet(tl, a, b)[1]
            counts[(a, b)] = len(bots)
    return SweepResult(alphas, betas, counts)


def tuned_sweep_fixture(keyword: str = "dld.bz") -> tuple[list[Tweet], list[Tweet]]:
    """A hand-built candidate group shaped like the published tuning curves.

    Returns ``(sample, archive)``. Every account tweets the seed text (the only
    tweet carrying ``keyword``); timelines hold ten distinct texts:

    * 30 core bots: seed + nine texts shared by all core bots (ratio 1);
    * 16 accounts in pairs, 6 in two triples, 4 in a quad: seed + two core
      texts + seven texts shared only within the tuple. They look fully
      frequent until alpha exceeds the tuple size, then drop to ratio 0.3;
    * 4 tail accounts at ratios 0.6, 0.7, 0.8, 0.9;
    * 4 / 14 / 12 accounts at ratios 0.3 / 0.4 / 0.5.

    With beta = 0.6 the alpha curve over 2..6 is 60, 44, 38, 34, 34 (largest
    drop 2 -> 3). With alpha = 3 the beta curve over 0.3..0.9 is
    90, 70, 56, 44, 43, 42, 41: it flattens from 0.6 on.
    """
    t0 = DEFAULT_START
    seed = f"Exclusive offer inside http://{keyword}/Xq7Lm2"
    core = [f"core message {i}" for i in range(9)]
    timelines: dict[str, list[str]] = {}
    n = 0

    def acct(prefix: str) -> str:
        nonlocal n
        n += 1
        return f"{prefix}{n:03d}"

    def uniques(k: int, who: str) -> list[str]:
        return [f"personal note {who} {i}" for i in range(k)]

    for _ in range(30):
        a = acct("core")
        timelines[a] = [seed, *core]
    for size, count in ((2, 8), (3, 2), (4, 1)):
        for g in range(count):
            shared = [f"tuple{size}-{g} text {i}" for i in range(7)]
            for _ in range(size):
                a = acct(f"t{size}_")
                timelines[a] = [seed, core[0], core[1], *shared]
    for r in (6, 7, 8, 9):
        a = acct("tail")
        timelines[a] = [seed, *core[:r - 1], *uniques(10 - r, a)]
    for r, count in ((3, 4), (4, 14), (5, 12)):
        for _ in range(count):
            a = acct(f"r{r}_")
            timelines[a] = [seed, *core[:r - 1], *uniques(10 - r, a)]

    sample, archive = [], []
    for a in sorted(timelines):
        profile = Account(a, a, 100, 100, 100, "en", t0 - timedelta(days=400))
        for i, text in enumerate(timelines[a]):
            tw = Tweet(f"{a}-{i}", a, text, t0 + timedelta(minutes=i), _urls(text), profile)
            archive.append(tw)
            if text == seed:
                sample.append(tw)
    archive.sort(key=lambda t: (t.created_at, t.tweet_id))
    sample.sort(key=lambda t: (t.created_at, t.tweet_id))
    return sample, archive


@dataclass
class LinkFarm:
    botnets: list[BotGroup]
    web: SyntheticWeb
    registry: FakeRegistry
    email: str
    domains: list[str]
    accounts: frozenset[AccountId]

    def resolutions(self, max_retry: int = 5) -> dict[str, Any]:
        from .resolver import SyntheticHttpClient, SyntheticNavigator, classify_url

        http, nav = SyntheticHttpClient(self.web), SyntheticNavigator(self.web)
        urls = sorted({u for b in self.botnets for u in b.urls})
        return {u: classify_url(u, http, nav, max_retry) for u in urls}


def link_farm_fixture(n_botnets: int = 5, domains_per_botnet: int = 8,
                      email: str = "farmer@mailbox.example", overlap: int = 5) -> LinkFarm:
    """One registrant, ``n_botnets * domains_per_botnet`` domains, every page boosting one parent site.

    Consecutive botnets share ``overlap`` accounts so the campaign's account
    count is a true union, not a sum. A few more domains are registered to the
    same email but never tweeted (dormant).
    """
    web = SyntheticWeb()
    web.add("parent-site.example", page="<html>parent</html>")
    records: dict[str, dict[str, Any]] = {}
    botnets, domains, accounts = [], [], set()
    for b in range(n_botnets):
        size = 20 + 5 * b
        shared = sorted(botnets[-1].members)[-overlap:] if botnets else []
        members = frozenset(shared + [f"farm{b}_{i:03d}" for i in range(size - len(shared))])
        accounts |= members
        urls = []
        for d in range(domains_per_botnet):
            dom = f"boost{b}x{d}.club"
            domains.append(dom)
            records[dom] = {"email": email, "name": "farmer", "created_on": "2017-09-09"}
            web.add(dom, client_redirect="http://parent-site.example/")
            urls.append(f"http://{dom}/promo/{d}")
        botnets.append(BotGroup(
            group_id=f"farm{b:02d}", trigger_keyword="dld.bz", members=members,
            frequent_tweets=frozenset({f"farm text {b}"}),
            dominant_url=extract_netloc(urls[0]), detected_at=DEFAULT_START + timedelta(days=b),
            alpha_used=3, beta_used=0.6, urls=tuple(urls)))
    for d in range(3):
        records[f"dormant{d}.club"] = {"email": email, "name": "farmer", "created_on": "2017-09-09"}
    records["unrelated.club"] = {"email": "someone@else.example", "name": "x", "created_on": "2016-01-01"}
    return LinkFarm(botnets, web, FakeRegistry(records), email, sorted(domains), frozenset(accounts))
