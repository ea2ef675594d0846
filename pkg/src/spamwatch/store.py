"""Append-only JSON-lines store of detections with in-memory indexes.

The log is the source of truth. Indexes are rebuilt from it on open, so a
process killed between an append and the index update loses nothing; a torn
final line (killed mid-write) is discarded and truncated away.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import defaultdict
from pathlib import Path
from typing import Any, Iterable

from .campaign import BlacklistEntry, Campaign, StoreError
from .model import Account, BotGroup

log = logging.getLogger(__name__)


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class DetectionStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.RLock()
        self._groups: dict[str, dict[str, Any]] = {}
        self._by_keyword: dict[str, list[str]] = defaultdict(list)
        self._accounts: dict[str, dict[str, Any]] = {}
        self._account_groups: dict[str, set[str]] = defaultdict(set)
        self._campaigns: dict[str, dict[str, Any]] = {}
        self._blacklist: dict[tuple[str, str], dict[str, Any]] = {}
        self._daily: dict[tuple[str, str], dict[str, Any]] = {}
        self.recovered_bad_lines = 0
        self._open()

    # -- log handling ----------------------------------------------------

    def _open(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch(exist_ok=True)
            with self.path.open("rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise StoreError(f"cannot open store {self.path}: {exc}") from exc
        good_end = 0
        offset = 0
        for raw in data.splitlines(keepends=True):
            offset += len(raw)
            if not raw.endswith(b"\n"):
                self.recovered_bad_lines += 1
                break
            try:
                rec = json.loads(raw)
                self._apply(rec)
            except (ValueError, KeyError, TypeError) as exc:
                self.recovered_bad_lines += 1
                log.warning("store %s: dropping bad record at byte %d: %s", self.path, good_end, exc)
                continue
            good_end = offset
        if good_end < len(data):
            with self.path.open("r+b") as fh:
                fh.truncate(good_end)

    def _append(self, rec: dict[str, Any]) -> None:
        line = (_dump(rec) + "\n").encode("utf-8")
        try:
            with self.path.open("ab") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StoreError(f"append to {self.path} failed: {exc}") from exc

    def _apply(self, rec: dict[str, Any]) -> None:
        kind = rec["type"]
        if kind == "botnet":
            group = rec["botnet"]
            gid = group["group_id"]
            if gid in self._groups:
                return
            self._groups[gid] = rec
            self._by_keyword[group["keyword"]].append(gid)
            for acct in rec.get("accounts", []):
                self._accounts[acct["id"]] = acct
            for member in group["members"]:
                self._account_groups[member].add(gid)
        elif kind == "campaign":
            self._campaigns[rec["campaign"]["registrant_email"]] = rec["campaign"]
        elif kind == "blacklist":
            e = rec["entry"]
            self._blacklist[(e["kind"], e["value"])] = e
        elif kind == "daily_stat":
            self._daily[(rec["date"], rec["keyword"])] = {
                k: rec[k] for k in ("date", "keyword", "fraction", "tweets", "bot_tweets")}
        else:
            raise ValueError(f"unknown record type {kind!r}")

    def _write(self, rec: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            self._append(rec)
            self._apply(rec)
        return {"ok": True, "type": rec["type"]}

    # -- writers ---------------------------------------------------------

    def record_botnet(self, group: BotGroup, accounts: Iterable[Account | dict[str, Any]] = (),
                      report: dict[str, Any] | None = None) -> dict[str, Any]:
        with self._lock:
            if group.group_id in self._groups:
                return {"ok": True, "type": "botnet", "duplicate": True}
            accts = [a.to_json() if isinstance(a, Account) else dict(a) for a in accounts]
            accts.sort(key=lambda a: a["id"])
            rec = {"type": "botnet", "botnet": group.to_json(), "accounts": accts,
                   "report": report or group.report()}
            return self._write(rec)

    def record_campaign(self, campaign: Campaign) -> dict[str, Any]:
        return self._write({"type": "campaign", "campaign": campaign.to_json()})

    def record_blacklist(self, entry: BlacklistEntry) -> dict[str, Any]:
        return self._write({"type": "blacklist", "entry": entry.to_json()})

    def record_daily_stat(self, day: str, keyword: str, fraction: float, tweets: int,
                          bot_tweets: int) -> dict[str, Any]:
        return self._write({"type": "daily_stat", "date": day, "keyword": keyword,
                            "fraction": round(fraction, 6), "tweets": tweets,
                            "bot_tweets": bot_tweets})

    def record(self, item: Any, **kwargs: Any) -> dict[str, Any]:
        """Dispatch on the item type; daily stats are passed as a dict."""
        if isinstance(item, BotGroup):
            return self.record_botnet(item, **kwargs)
        if isinstance(item, Campaign):
            return self.record_campaign(item)
        if isinstance(item, BlacklistEntry):
            return self.record_blacklist(item)
        if isinstance(item, dict) and {"date", "keyword", "fraction"} <= item.keys():
            return self.record_daily_stat(item["date"], item["keyword"], item["fraction"],
                                          int(item.get("tweets", 0)), int(item.get("bot_tweets", 0)))
        raise TypeError(f"cannot record {type(item).__name__}")

    # -- readers ---------------------------------------------------------

    def group_ids(self, keyword: str | None = None, day: str | None = None) -> list[str]:
        with self._lock:
            ids = list(self._by_keyword.get(keyword, ())) if keyword else list(self._groups)
            recs = [self._groups[i] for i in ids]
        if day:
            recs = [r for r in recs if r["botnet"]["detected_at"].startswith(day)]
        recs.sort(key=lambda r: (r["botnet"]["detected_at"], r["botnet"]["group_id"]))
        return [r["botnet"]["group_id"] for r in recs]

    def group(self, gid: str) -> dict[str, Any] | None:
        with self._lock:
            return self._groups.get(gid)

    def group_summary(self, gid: str) -> dict[str, Any] | None:
        rec = self.group(gid)
        if rec is None:
            return None
        b = rec["botnet"]
        return {
            "group_id": b["group_id"],
            "keyword": b["keyword"],
            "member_count": len(b["members"]),
            "dominant_url": b["dominant_url"],
            "frequent_tweet_count": len(b["frequent_tweets"]),
            "detected_at": b["detected_at"],
            "alpha": b["alpha"],
            "beta": b["beta"],
        }

    def group_accounts(self, gid: str) -> list[dict[str, Any]] | None:
        rec = self.group(gid)
        if rec is None:
            return None
        with self._lock:
            out = []
            for member in rec["botnet"]["members"]:
                acct = self._accounts.get(member, {"id": member})
                out.append({k: acct.get(k) for k in
                            ("id", "screen_name", "statuses_count", "friends_count",
                             "followers_count", "lang", "created_at")})
        return sorted(out, key=lambda a: a["id"])

    def campaigns(self) -> list[dict[str, Any]]:
        with self._lock:
            return [self._campaigns[e] for e in sorted(self._campaigns)]

    def campaign(self, email: str) -> dict[str, Any] | None:
        with self._lock:
            return self._campaigns.get(email)

    def blacklist(self, kind: str | None = None) -> list[dict[str, Any]]:
        with self._lock:
            keys = sorted(k for k in self._blacklist if kind is None or k[0] == kind)
            return [self._blacklist[k] for k in keys]

    def blacklist_entry(self, kind: str, value: str) -> dict[str, Any] | None:
        with self._lock:
            return self._blacklist.get((kind, value))

    def daily_stats(self, keyword: str | None = None) -> list[dict[str, Any]]:
        with self._lock:
            keys = sorted(k for k in self._daily if keyword is None or k[1] == keyword)
            return [self._daily[k] for k in keys]

    def account_groups(self, account_id: str) -> list[str]:
        with self._lock:
            return sorted(self._account_groups.get(account_id, ()))

    def __len__(self) -> int:
        with self._lock:
            return len(self._groups)
