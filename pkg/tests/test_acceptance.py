"""Acceptance gate: nine end-to-end criteria, each printing one PASS/FAIL line."""

import json
import os
import random
import signal
import subprocess
import sys
import time
import urllib.request
from datetime import timedelta
from pathlib import Path

import pytest

from spamwatch.campaign import Blacklist, map_campaigns, update_blacklist
from spamwatch.config import Config
from spamwatch.detector import ArchiveTimelineProvider, DetectionParams, detect_botnet, detected_accounts, run_detection
from spamwatch.model import Tweet
from spamwatch.pipeline import run_from_config
from spamwatch.resolver import SyntheticHttpClient, SyntheticNavigator, UrllibHttpClient, UrllibNavigator, classify_url, follow_redirects
from spamwatch.store import DetectionStore
from spamwatch.synthetic import (
    ARCHETYPE_URLS,
    build_synthetic_web,
    default_scenario,
    evaluate,
    frange,
    generate_world,
    link_farm_fixture,
    random_web,
    sweep,
    tuned_sweep_fixture,
    write_world,
)
from spamwatch.trend import TrendWindow
from spamwatch.webserver import SyntheticWebServer

from conftest import T0, oracle_detect, oracle_top_k

SEVEN = ["id", "screen_name", "statuses_count", "friends_count", "followers_count", "lang", "created_at"]
BETA_GRID = [round(0.1 * i, 1) for i in range(2, 11)]


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def default_world():
    return generate_world(default_scenario())


def _random_instance(rng: random.Random) -> dict[str, set[str]]:
    vocab = [f"t{i}" for i in range(rng.randint(1, 30))]
    return {f"a{i}": set(rng.sample(vocab, rng.randint(1, min(20, len(vocab)))))
            for i in range(rng.randint(1, 10))}


def test_c1_frequent_set_clustering_matches_exhaustive_oracle(verdict):
    rng = random.Random(2017)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        tl = _random_instance(rng)
        alpha, beta = rng.randint(1, 5), rng.choice(BETA_GRID)
        if detect_botnet(tl, alpha, beta) != oracle_detect(tl, alpha, beta):
            mismatches += 1
    elapsed = time.perf_counter() - start
    verdict(1, mismatches == 0 and elapsed < 10,
            f"1000 instances, {mismatches} mismatches, {elapsed:.2f}s (limit 10s)")


def test_c2_monotonicity(verdict):
    rng = random.Random(7)
    violations = 0
    for _ in range(100):
        tl = _random_instance(rng)
        for alpha in range(1, 6):
            for i, beta in enumerate(BETA_GRID):
                c, s = detect_botnet(tl, alpha, beta)
                c_a, s_a = detect_botnet(tl, alpha + 1, beta)
                violations += not (c_a <= c and s_a <= s)
                if i + 1 < len(BETA_GRID):
                    c_b, s_b = detect_botnet(tl, alpha, BETA_GRID[i + 1])
                    violations += not (c_b == c and s_b <= s)
    verdict(2, violations == 0, f"100 instances x full grid, {violations} violations")


def _daily_detection(world):
    provider = world.provider()
    flagged = set()
    for day in range(world.spec.duration_days):
        _, hi = world.day_bounds(day)
        view = provider.at(hi)
        for keyword in world.keywords():
            sample = world.stream_for_day(day, keyword)
            flagged |= detected_accounts(run_detection(sample, view, DetectionParams(3, 0.6, 20), keyword,
                                                       hi, max_workers=1))
    return flagged


def test_c3_planted_botnet_recovery(verdict):
    start = time.perf_counter()
    world = generate_world(default_scenario())
    flagged = _daily_detection(world)
    ev = evaluate(flagged, world)
    elapsed = time.perf_counter() - start
    ok = (ev.precision >= 0.95 and ev.recall >= 0.90 and ev.unique_human_false_positives == 0
          and elapsed < 60)
    verdict(3, ok, f"precision {ev.precision:.3f} (>=0.95), recall {ev.recall:.3f} (>=0.90), "
                   f"unique-text human FPs {ev.unique_human_false_positives}, {elapsed:.1f}s (limit 60s)")


def _configured_keywords(world):
    return sorted({b.shortener for b in world.botnets} - {"twitbr.tk"})


def test_c4_bot_traffic_fraction_over_14_days(verdict, default_world, tmp_path):
    world = default_world
    paths = write_world(world, tmp_path)
    cfg = Config.from_file(paths["config"])
    cfg.api_port = None
    store = run_from_config(cfg).store
    truth = world.truth()["daily_bot_fraction"]
    errors = []
    for keyword in _configured_keywords(world):
        series = store.daily_stats(keyword)
        if len(series) != world.spec.duration_days:
            errors.append(float("inf"))
        for s in series:
            errors.append(abs(s["fraction"] - truth[s["date"]][keyword]))
    worst = max(errors)
    mean_truth = sum(truth[d][k] for d in truth for k in _configured_keywords(world)) / (
        len(truth) * len(_configured_keywords(world)))
    verdict(4, worst <= 3.0, f"{len(errors)} keyword-days, true mean {mean_truth:.1f}%, "
                             f"worst |measured - truth| {worst:.2f} pp (limit 3)")


def test_c5_resolver_truth_table(verdict):
    web = build_synthetic_web(chain_depth=7)
    outcomes = {}
    with SyntheticWebServer(web) as server:
        http = UrllibHttpClient(proxy=server.proxy_url, timeout=5)
        nav = UrllibNavigator(http)
        for name in ("safe", "phishing", "secret"):
            r = classify_url(ARCHETYPE_URLS[name], http, nav)
            outcomes[name] = (r.has_secret_url, r.is_phishing)
        server.clear_log()
        chain = follow_redirects(ARCHETYPE_URLS["chain"], http, max_retry=5)
        hops = server.hop_log
    table_ok = outcomes == {"safe": (False, False), "phishing": (False, True), "secret": (True, True)}
    chain_ok = len(hops) <= 5 and len(hops) == len(chain.chain) and \
        [u for u, _ in hops] == [u for u, _ in chain.chain]
    rng = random.Random(99)
    implication_violations = 0
    for _ in range(1000):
        rweb, urls = random_web(rng)
        http2, nav2 = SyntheticHttpClient(rweb), SyntheticNavigator(rweb)
        for url in urls:
            r = classify_url(url, http2, nav2)
            implication_violations += bool(r.has_secret_url and not r.is_phishing)
    verdict(5, table_ok and chain_ok and implication_violations == 0,
            f"archetypes {outcomes}, depth-7 chain used {len(hops)} GETs (server log), "
            f"secret=>phishing violations over 1000 webs: {implication_violations}")


def test_c6_top_k_exactness(verdict):
    mismatches = whitelist_fires = repeat_fires = 0
    names = [f"n{i}.example" for i in range(500)]
    whitelist = set(names[:25])
    for seed in range(100):
        rng = random.Random(seed)
        w = TrendWindow(k=15, window_minutes=60, whitelist=whitelist, window_started_at=T0)
        counts: dict[str, int] = {}
        fired_this_window: set[str] = set()
        window_start = T0
        for i in range(10_000):
            now = T0 + timedelta(seconds=i * 1.08)  # three windows per run
            if now >= window_start + timedelta(minutes=60):
                window_start += timedelta(minutes=60)
                counts, fired_this_window = {}, set()
            host = names[min(int(rng.expovariate(1 / 60)), 499)]
            url = f"http://{host}/"
            for trig in w.observe(Tweet(str(i), "u", url, now, (url,))):
                whitelist_fires += trig.netloc in whitelist
                repeat_fires += trig.netloc in fired_this_window
                fired_this_window.add(trig.netloc)
            counts[host] = counts.get(host, 0) + 1
            if i % 1000 == 999 and w.top_k_snapshot() != oracle_top_k(counts, 15):
                mismatches += 1
    verdict(6, mismatches == whitelist_fires == repeat_fires == 0,
            f"100 seeds x 10,000 increments over 500 netlocs: {mismatches} snapshot mismatches, "
            f"{whitelist_fires} whitelisted triggers, {repeat_fires} repeat triggers in a window")


def test_c7_sweep_reproduction(verdict, default_world):
    sample, archive = tuned_sweep_fixture()
    result = sweep(sample, ArchiveTimelineProvider(archive), range(2, 7), frange(0.3, 0.9, 0.1))
    report = result.elbow_report()
    drop = report["alpha_sweep"]["largest_drop"]
    onset = report["beta_sweep"]["plateau_onset"]
    world = default_world
    day_sample = [t for k in world.keywords() for t in world.stream_for_day(3, k)]
    _, hi = world.day_bounds(3)
    wide = sweep(day_sample, world.provider().at(hi), range(1, 7), frange(0.1, 1.0, 0.1))
    monotone = all(
        all(x >= y for x, y in zip(c, c[1:]))
        for c in [wide.curve_alpha(b) for b in wide.betas] + [wide.curve_beta(a) for a in wide.alphas]
    )
    ok = (drop["from"], drop["to"]) == (2, 3) and abs(onset - 0.6) <= 0.1 + 1e-9 and monotone
    verdict(7, ok, f"alpha curve {result.curve_alpha(0.6)} largest drop {drop['from']}->{drop['to']}; "
                   f"beta curve {result.curve_beta(3)} plateau onset {onset}; "
                   f"default-scenario grid monotone: {monotone}")


def test_c8_link_farm_campaign_and_idempotent_blacklist(verdict, tmp_path):
    farm = link_farm_fixture()
    camps = map_campaigns(farm.botnets, farm.resolutions(), farm.registry, policy="all")
    one = len(camps) == 1
    camp = camps[0] if camps else None
    exact = one and camp.registrant_email == farm.email and sorted(camp.domains) == farm.domains \
        and camp.total_accounts == len(farm.accounts) and len(camp.botnets) == 5

    bl = Blacklist()
    store = DetectionStore(tmp_path / "store.jsonl")
    states = []
    for _ in range(2):
        for entry in update_blacklist(bl, camps, T0, farm.registry):
            store.record(entry)
        states.append((bl.dumps(), json.dumps(store.blacklist(), sort_keys=True)))
    reopened = json.dumps(DetectionStore(tmp_path / "store.jsonl").blacklist(), sort_keys=True)
    idempotent = states[0] == states[1] and reopened == states[0][1]
    verdict(8, exact and idempotent,
            f"{len(camps)} campaign(s), {len(camp.domains) if camp else 0} domains (want 40), "
            f"{camp.total_accounts if camp else 0} accounts (want {len(farm.accounts)}), "
            f"blacklist byte-identical after double insert: {idempotent}")


def _get(port: int, path: str) -> bytes:
    with urllib.request.urlopen(f"http://127.0.0.1:{port}{path}", timeout=10) as resp:
        return resp.read()


def _spawn(*args: str) -> tuple[subprocess.Popen, dict]:
    proc = subprocess.Popen([sys.executable, "-m", "spamwatch.cli", *args],
                            stdout=subprocess.PIPE, text=True)
    return proc, json.loads(proc.stdout.readline())


@pytest.mark.slow
def test_c9_end_to_end_generate_run_query_restart(verdict, tmp_path):
    out = tmp_path / "world"
    gen = subprocess.run([sys.executable, "-m", "spamwatch.cli", "generate", "--scenario", "default",
                          "--out", str(out)], capture_output=True, text=True, check=True)
    paths = json.loads(gen.stdout)
    truth = json.loads(Path(paths["truth"]).read_text())

    run, hello = _spawn("run", "--config", paths["config"], "--port", "0")
    problems = []
    try:
        drained = json.loads(run.stdout.readline())
        assert drained["event"] == "drained"
        port = hello["port"]
        groups = json.loads(_get(port, "/api/groups?limit=1000"))["items"]
        member_sets = []
        for g in groups:
            accts = json.loads(_get(port, f"/api/groups/{g['group_id']}/accounts?limit=1000"))["items"]
            if any(set(a) != set(SEVEN) for a in accts):
                problems.append(f"group {g['group_id']} account fields")
            member_sets.append({a["id"] for a in accts})
        missing = [b["index"] for b in truth["botnets"] if set(b["members"]) not in member_sets]
        if missing:
            problems.append(f"botnets not served: {missing}")
        worst = 0.0
        keywords = sorted({b["shortener"] for b in truth["botnets"]} - {"twitbr.tk"})
        for k in keywords:
            series = json.loads(_get(port, f"/api/stats/daily?keyword={k}"))["items"]
            if len(series) != len(truth["daily_bot_fraction"]):
                problems.append(f"{k}: {len(series)} daily points")
            for s in series:
                worst = max(worst, abs(s["fraction"] - truth["daily_bot_fraction"][s["date"]][k]))
        if worst > 3.0:
            problems.append(f"daily fraction off by {worst:.2f} pp")
        probes = ["/api/groups?limit=1000", "/api/campaigns", "/api/blacklist?limit=1000",
                  "/api/stats/daily?limit=1000"]
        probes += [f"/api/groups/{g['group_id']}" for g in groups[:10]]
        probes += [f"/api/groups/{g['group_id']}/accounts" for g in groups[:10]]
        before = {p: _get(port, p) for p in probes}
    finally:
        os.kill(run.pid, signal.SIGKILL)
        run.wait(timeout=10)

    serve, hello2 = _spawn("serve", "--store", str(out / "store.jsonl"), "--port", "0")
    try:
        after = {p: _get(hello2["port"], p) for p in probes}
    finally:
        serve.terminate()
        serve.wait(timeout=10)
    changed = [p for p in probes if before[p] != after[p]]
    if changed:
        problems.append(f"responses changed after restart: {changed}")
    verdict(9, not problems,
            f"{len(groups)} groups served, all {len(truth['botnets'])} planted botnets present, "
            f"daily stats within {worst:.2f} pp, {len(probes)} responses identical after kill -9 + restart"
            if not problems else "; ".join(problems))
