"""Command-line entry points.

Exit codes: 0 success, 1 operational error, 2 bad usage. Errors go to stderr
as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import signal
import sys
import threading
from pathlib import Path
from typing import Any, NoReturn

from .campaign import StoreError
from .config import Config, ConfigError
from .detector import (
    ArchiveTimelineProvider,
    DetectionParams,
    bot_traffic_fraction,
    detected_accounts,
    run_detection,
)
from .ingest import SourceUnavailable, open_stream
from .model import MalformedUrl, ParseError, Tweet
from .resolver import MAX_RETRY, UrllibHttpClient, UrllibNavigator, classify_url

log = logging.getLogger("spamwatch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")
    sys.stdout.flush()


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def parse_int_range(text: str) -> list[int]:
    """``"2..6"`` -> [2, 3, 4, 5, 6]; a single number is a one-point range."""
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", text)
    if not m:
        raise UsageError(f"bad integer range {text!r}; expected A..B")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if hi < lo:
        raise UsageError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def parse_float_range(text: str) -> list[float]:
    """``"0.3..0.9:0.1"`` -> [0.3, 0.4, ..., 0.9]; step defaults to 0.1."""
    from .synthetic import frange

    m = re.fullmatch(r"\s*([\d.]+)\s*(?:\.\.\s*([\d.]+)\s*(?::\s*([\d.]+)\s*)?)?", text)
    if not m:
        raise UsageError(f"bad float range {text!r}; expected A..B:STEP")
    try:
        lo = float(m.group(1))
        hi = float(m.group(2)) if m.group(2) else lo
        step = float(m.group(3)) if m.group(3) else 0.1
    except ValueError as exc:
        raise UsageError(f"bad float range {text!r}") from exc
    if hi < lo or step <= 0:
        raise UsageError(f"empty range {text!r}")
    return frange(lo, hi, step)


def _read_tweets(path: str) -> list[Tweet]:
    with open_stream(path, keyword="") as stream:
        tweets = list(stream)
        if stream.parse_errors:
            log.warning("%s: skipped %d malformed lines", path, stream.parse_errors)
    return tweets


def _provider(tweets: list[Tweet], timelines: str | None,
              unavailable: list[str] | None = None) -> ArchiveTimelineProvider:
    if timelines:
        return ArchiveTimelineProvider.from_file(timelines, unavailable or ())
    return ArchiveTimelineProvider(tweets, unavailable or ())


def cmd_replay(args: argparse.Namespace) -> int:
    params = DetectionParams(args.alpha, args.beta, args.min_group_size)
    tweets = _read_tweets(args.input)
    kw = args.keyword.lower()
    sample = [t for t in tweets if kw in t.text.lower()]
    provider = _provider(tweets, args.timelines)
    detected_at = max((t.created_at for t in sample), default=None)
    detections = run_detection(sample, provider, params, args.keyword, detected_at,
                               depth=args.depth, max_workers=1,
                               strip_urls=args.strip_urls) if sample else []
    bots = detected_accounts(detections)
    groups = []
    for d in detections:
        report = d.report()
        report["bots"] = sorted(d.group.members)
        report["frequent_tweets"] = sorted(d.group.frequent_tweets)
        groups.append(report)
    _emit({
        "keyword": args.keyword,
        "alpha": params.alpha,
        "beta": params.beta,
        "min_group_size": params.min_group_size,
        "sample_size": len(sample),
        "groups": groups,
        "bot_accounts": sorted(bots),
        "bot_traffic_fraction": bot_traffic_fraction(sample, bots) if sample else None,
    })
    return 0


def cmd_resolve(args: argparse.Namespace) -> int:
    if args.web_spec:
        from .pipeline import make_clients

        http, nav = make_clients(args.web_spec)
    else:
        http = UrllibHttpClient(proxy=args.proxy)
        nav = UrllibNavigator(http)
    result = classify_url(args.url, http, nav, args.max_retry)
    _emit(result.to_json())
    return 1 if result.status == "failed" else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    from .synthetic import sweep

    alphas = parse_int_range(args.alpha)
    betas = parse_float_range(args.beta)
    if any(not 0 < b <= 1 for b in betas) or alphas[0] < 1:
        raise UsageError("alpha must be >= 1 and beta in (0, 1]")
    tweets = _read_tweets(args.input)
    kw = args.keyword.lower()
    sample = [t for t in tweets if kw in t.text.lower()]
    result = sweep(sample, _provider(tweets, args.timelines), alphas, betas,
                   min_group_size=args.min_group_size, depth=args.depth)
    report = result.elbow_report(alpha=3, beta=0.6)
    if (3, 0.6) in result.counts:
        report["defaults"]["bot_count"] = result.counts[(3, 0.6)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(result.to_csv(), "utf-8")
    (out / "elbow.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", "utf-8")
    _emit({"csv": str(out / "sweep.csv"), "elbow": str(out / "elbow.json"), **report})
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    from .synthetic import ScenarioSpec, default_scenario, generate_world, write_world

    if args.scenario == "default":
        spec = default_scenario()
    else:
        try:
            spec = ScenarioSpec.from_file(args.scenario)
        except FileNotFoundError as exc:
            raise SourceUnavailable(f"no scenario file {args.scenario}") from exc
        except (TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad scenario: {exc}") from exc
    if args.seed is not None:
        spec.seed = args.seed
    paths = write_world(generate_world(spec), args.out)
    _emit(paths)
    return 0


def _wait_for_signal() -> threading.Event:
    stop = threading.Event()
    for sig in (signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, lambda *_: stop.set())
    return stop


def cmd_run(args: argparse.Namespace) -> int:
    from .pipeline import run_from_config

    config = Config.from_file(args.config)
    if args.port is not None:
        config.api_port = args.port
    if args.exit_when_drained:
        config.exit_when_drained = True
    if args.speedup is not None:
        config.speedup = args.speedup
    run_from_config(config, announce=_emit, stop=_wait_for_signal())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .api import serve_api
    from .store import DetectionStore

    if not Path(args.store).exists():
        raise SourceUnavailable(f"no store at {args.store}")
    store = DetectionStore(args.store)
    stop = _wait_for_signal()
    server = serve_api(store, args.port, args.host)
    _emit({"event": "listening", "host": args.host, "port": server.port, "groups": len(store)})
    try:
        stop.wait()
    finally:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spamwatch", description="Botnet and spam-campaign detection over tweet streams.")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="stream monitor + scheduler + workers + API")
    r.add_argument("--config", required=True)
    r.add_argument("--port", type=int, help="override api_port (0 picks a free port)")
    r.add_argument("--exit-when-drained", action="store_true")
    r.add_argument("--speedup", type=float)
    r.set_defaults(func=cmd_run)

    d = DetectionParams()
    rp = sub.add_parser("replay", help="one-shot detection over a tweet file")
    rp.add_argument("--input", required=True)
    rp.add_argument("--keyword", required=True)
    rp.add_argument("--alpha", type=int, default=d.alpha)
    rp.add_argument("--beta", type=float, default=d.beta)
    rp.add_argument("--min-group-size", type=int, default=d.min_group_size)
    rp.add_argument("--timelines", help="archive to read timelines from (default: the input)")
    rp.add_argument("--depth", type=int, default=200)
    rp.add_argument("--strip-urls", action="store_true")
    rp.set_defaults(func=cmd_replay)

    rs = sub.add_parser("resolve", help="follow redirects and classify one URL")
    rs.add_argument("url")
    rs.add_argument("--web-spec", help="synthetic web JSON instead of the real network")
    rs.add_argument("--proxy")
    rs.add_argument("--max-retry", type=int, default=MAX_RETRY)
    rs.set_defaults(func=cmd_resolve)

    sw = sub.add_parser("sweep", help="bot counts over an alpha x beta grid")
    sw.add_argument("--input", required=True)
    sw.add_argument("--alpha", default="2..6")
    sw.add_argument("--beta", default="0.3..0.9:0.1")
    sw.add_argument("--keyword", default="", help="only tweets containing this form the sample")
    sw.add_argument("--timelines")
    sw.add_argument("--min-group-size", type=int, default=d.min_group_size)
    sw.add_argument("--depth", type=int, default=200)
    sw.add_argument("--out", default=".")
    sw.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", help="write a synthetic world")
    g.add_argument("--scenario", required=True, help="scenario JSON, or 'default'")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    sv = sub.add_parser("serve", help="API over an existing store")
    sv.add_argument("--store", required=True)
    sv.add_argument("--port", type=int, default=8080)
    sv.add_argument("--host", default="127.0.0.1")
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError, MalformedUrl) as exc:
        return _fail("usage", str(exc), 2)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            return _fail("operational", str(exc), 1)
        return _fail("usage", str(exc), 2)
    except (SourceUnavailable, StoreError, OSError) as exc:
        return _fail("operational", str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
