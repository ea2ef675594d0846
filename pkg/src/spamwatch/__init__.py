"""Detect URL-spamming botnets in tweet streams and trace them to the spam campaigns behind them."""

from .campaign import Blacklist, Campaign, FakeRegistry, lookup_registrant, map_campaigns, update_blacklist
from .detector import (
    ArchiveTimelineProvider,
    DetectionParams,
    bot_traffic_fraction,
    detect_botnet,
    dominant_embedded_url,
    fetch_timelines,
    group_by_duplicate,
    run_detection,
)
from .model import Account, BotGroup, Timeline, Tweet, Url, canonicalize_text, extract_netloc
from .resolver import ResolvedUrl, SyntheticWeb, classify_url, follow_redirects
from .scheduler import Job, Schedule
from .store import DetectionStore
from .trend import TrendWindow, Trigger

__version__ = "0.1.0"

__all__ = [
    "Account",
    "ArchiveTimelineProvider",
    "Blacklist",
    "BotGroup",
    "Campaign",
    "DetectionParams",
    "DetectionStore",
    "FakeRegistry",
    "Job",
    "ResolvedUrl",
    "Schedule",
    "SyntheticWeb",
    "Timeline",
    "TrendWindow",
    "Trigger",
    "Tweet",
    "Url",
    "bot_traffic_fraction",
    "canonicalize_text",
    "classify_url",
    "detect_botnet",
    "dominant_embedded_url",
    "extract_netloc",
    "fetch_timelines",
    "follow_redirects",
    "group_by_duplicate",
    "lookup_registrant",
    "map_campaigns",
    "run_detection",
    "update_blacklist",
]
