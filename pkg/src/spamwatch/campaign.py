"""Registrant lookups, registrant-to-botnet campaign mapping and the evolving blacklist."""

from __future__ import annotations

import json
import logging
import time
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import date, datetime
from functools import lru_cache
from pathlib import Path
from typing import Any, Protocol

from publicsuffixlist import PublicSuffixList

from .model import BotGroup, MalformedUrl, extract_netloc, format_time, parse_time
from .resolver import ResolvedUrl

log = logging.getLogger(__name__)


class ProviderUnavailable(ConnectionError):
    pass


class NoRecord(LookupError):
    pass


class StoreError(OSError):
    pass


@lru_cache(maxsize=1)
def _psl() -> PublicSuffixList:
    return PublicSuffixList(only_icann=True)


def registrable_domain(host: str) -> str:
    """Public-suffix-aware registered domain: ``savingzev.feedsted.us`` -> ``feedsted.us``."""
    host = extract_netloc(host).host.rstrip(".")
    return _psl().privatesuffix(host) or host


@dataclass(frozen=True)
class RegistrantRecord:
    domain: str
    registrant_email: str | None = None
    registrant_name: str | None = None
    created_on: date | None = None

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("domain must be non-empty")


class WhoisProvider(Protocol):
    def query(self, domain: str) -> dict[str, Any] | None:
        """Raw registration fields for ``domain`` or ``None``; may raise ProviderUnavailable."""
        ...


class FakeRegistry:
    """In-memory WHOIS: ``{domain: {"email", "name", "created_on"}}``."""

    def __init__(self, records: Mapping[str, Mapping[str, Any]] | None = None,
                 fail_times: int = 0):
        self.records = {d.lower(): dict(r) for d, r in (records or {}).items()}
        self.queries: list[str] = []
        self._fail_times = fail_times

    @classmethod
    def from_file(cls, path: str | Path) -> FakeRegistry:
        return cls(json.loads(Path(path).read_text("utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.records, indent=1, sort_keys=True) + "\n", "utf-8")

    def query(self, domain: str) -> dict[str, Any] | None:
        self.queries.append(domain)
        if self._fail_times > 0:
            self._fail_times -= 1
            raise ProviderUnavailable("registry temporarily unavailable")
        return self.records.get(domain.lower())

    def domains_for_email(self, email: str) -> list[str]:
        return sorted(d for d, r in self.records.items() if r.get("email") == email)


def lookup_registrant(domain: str, provider: WhoisProvider, retries: int = 3,
                      backoff: float = 0.5) -> RegistrantRecord:
    """Query the registrable domain behind ``domain``, retrying transient failures.

    Raises NoRecord when the provider knows nothing about the domain.
    """
    try:
        host = extract_netloc(domain).host
    except MalformedUrl as exc:
        raise ValueError(f"not a domain: {domain!r}") from exc
    target = registrable_domain(host)
    for attempt in range(retries + 1):
        try:
            raw = provider.query(target)
            break
        except ProviderUnavailable:
            if attempt == retries:
                raise
            time.sleep(backoff * (2 ** attempt))
    if raw is None:
        raise NoRecord(target)
    created = raw.get("created_on")
    return RegistrantRecord(
        domain=target,
        registrant_email=raw.get("email") or None,
        registrant_name=raw.get("name") or None,
        created_on=date.fromisoformat(created) if created else None,
    )


@dataclass
class Campaign:
    registrant_email: str
    domains: set[str] = field(default_factory=set)
    members: dict[str, frozenset[str]] = field(default_factory=dict)
    """group_id -> bot accounts of that botnet."""

    @property
    def botnets(self) -> set[str]:
        return set(self.members)

    @property
    def accounts(self) -> frozenset[str]:
        return frozenset().union(*self.members.values()) if self.members else frozenset()

    @property
    def total_accounts(self) -> int:
        return len(self.accounts)

    def to_json(self) -> dict[str, Any]:
        return {
            "registrant_email": self.registrant_email,
            "domains": sorted(self.domains),
            "botnets": sorted(self.members),
            "total_accounts": self.total_accounts,
        }


def _candidate_urls(botnet: BotGroup, policy: str) -> list[str]:
    if policy == "all":
        return sorted(set(botnet.urls) | ({botnet.dominant_url.geturl()} if botnet.dominant_url else set()))
    if policy != "dominant":
        raise ValueError(f"unknown url policy {policy!r}")
    return [botnet.dominant_url.geturl()] if botnet.dominant_url else []


def _lookup_resolution(resolutions: Mapping[str, ResolvedUrl], url: str) -> ResolvedUrl | None:
    if url in resolutions:
        return resolutions[url]
    try:
        return resolutions.get(extract_netloc(url).geturl())
    except MalformedUrl:
        return None


def map_campaigns(botnets: Iterable[BotGroup], resolutions: Mapping[str, ResolvedUrl],
                  whois: WhoisProvider, policy: str = "dominant",
                  unmapped: list[str] | None = None) -> list[Campaign]:
    """Group botnets with malicious URLs under the registrant email of the landing domain.

    ``policy="dominant"`` looks only at each botnet's dominant URL; ``"all"``
    considers every embedded URL seen in its timelines. Botnets with a malicious
    URL but no known registrant are appended to ``unmapped`` when given.
    """
    cache: dict[str, str | None] = {}
    campaigns: dict[str, Campaign] = {}

    def email_for(host: str) -> str | None:
        key = registrable_domain(host)
        if key not in cache:
            try:
                cache[key] = lookup_registrant(host, whois).registrant_email
            except (NoRecord, ProviderUnavailable) as exc:
                log.info("no registrant for %s: %s", host, exc)
                cache[key] = None
        return cache[key]

    for botnet in sorted(botnets, key=lambda b: b.group_id):
        mapped = False
        malicious_seen = False
        for url in _candidate_urls(botnet, policy):
            res = _lookup_resolution(resolutions, url)
            if res is None or not res.malicious:
                continue
            malicious_seen = True
            host = res.final_url.host
            email = email_for(host)
            if email is None:
                continue
            camp = campaigns.setdefault(email, Campaign(email))
            camp.domains.add(host)
            camp.members[botnet.group_id] = botnet.members
            mapped = True
        if malicious_seen and not mapped and unmapped is not None:
            unmapped.append(botnet.group_id)
    return [campaigns[e] for e in sorted(campaigns)]


# --------------------------------------------------------------------------
# blacklist


@dataclass(frozen=True)
class BlacklistEntry:
    kind: str
    value: str
    evidence: tuple[str, ...]
    first_seen: datetime
    last_seen: datetime

    def __post_init__(self) -> None:
        if self.kind not in ("email", "url", "account"):
            raise ValueError(f"bad blacklist kind {self.kind!r}")
        if not self.evidence:
            raise ValueError("blacklist entry needs evidence")

    def merged(self, evidence: Iterable[str], seen: datetime) -> BlacklistEntry:
        return BlacklistEntry(
            self.kind, self.value,
            tuple(sorted(set(self.evidence) | set(evidence))),
            min(self.first_seen, seen), max(self.last_seen, seen),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "value": self.value,
            "evidence": list(self.evidence),
            "first_seen": format_time(self.first_seen),
            "last_seen": format_time(self.last_seen),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> BlacklistEntry:
        return cls(obj["kind"], obj["value"], tuple(obj["evidence"]),
                   parse_time(obj["first_seen"]), parse_time(obj["last_seen"]))


class Blacklist:
    def __init__(self, entries: Iterable[BlacklistEntry] = ()):
        self.entries: dict[tuple[str, str], BlacklistEntry] = {}
        for e in entries:
            self.upsert(e.kind, e.value, e.evidence, e.first_seen)
            self.upsert(e.kind, e.value, e.evidence, e.last_seen)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def upsert(self, kind: str, value: str, evidence: Iterable[str], seen: datetime) -> BlacklistEntry:
        key = (kind, value)
        old = self.entries.get(key)
        if old is None:
            entry = BlacklistEntry(kind, value, tuple(sorted(set(evidence))), seen, seen)
        else:
            entry = old.merged(evidence, seen)
        self.entries[key] = entry
        return entry

    def sorted_entries(self) -> list[BlacklistEntry]:
        return [self.entries[k] for k in sorted(self.entries)]

    def dumps(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in self.sorted_entries())

    def export(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.dumps(), "utf-8")
        except OSError as exc:
            raise StoreError(f"cannot write blacklist {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> Blacklist:
        try:
            lines = Path(path).read_text("utf-8").splitlines()
        except OSError as exc:
            raise StoreError(f"cannot read blacklist {path}: {exc}") from exc
        return cls(BlacklistEntry.from_json(json.loads(line)) for line in lines if line.strip())


def update_blacklist(store: Blacklist, campaigns: Iterable[Campaign], now: datetime,
                     whois: WhoisProvider | None = None) -> list[BlacklistEntry]:
    """Upsert the email, every domain and every bot account of each campaign.

    With a registry that supports reverse lookup (``domains_for_email``), the
    other domains registered under a listed email enter as URL entries too, so
    dormant domains are blocked before they go live.
    """
    touched: dict[tuple[str, str], BlacklistEntry] = {}
    for camp in sorted(campaigns, key=lambda c: c.registrant_email):
        evidence = sorted(camp.members)
        if not evidence:
            continue
        touched[("email", camp.registrant_email)] = store.upsert(
            "email", camp.registrant_email, evidence, now)
        domains = set(camp.domains)
        reverse = getattr(whois, "domains_for_email", None)
        if reverse is not None:
            domains |= set(reverse(camp.registrant_email))
        for d in sorted(domains):
            touched[("url", d)] = store.upsert("url", d, evidence, now)
        for gid, accounts in sorted(camp.members.items()):
            for a in sorted(accounts):
                touched[("account", a)] = store.upsert("account", a, [gid], now)
    return [touched[k] for k in sorted(touched)]
