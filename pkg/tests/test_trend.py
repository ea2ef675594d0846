import random
from datetime import timedelta

from hypothesis import given, settings
from hypothesis import strategies as st

from spamwatch.model import Tweet
from spamwatch.trend import TrendWindow, load_whitelist, parse_whitelist

from conftest import T0, oracle_top_k


def url_tweet(netloc: str, minutes: float = 0, n: int = 0) -> Tweet:
    return Tweet(f"t{n}", "u", f"x http://{netloc}/p", T0 + timedelta(minutes=minutes),
                 (f"http://{netloc}/p",))


def test_first_k_distinct_netlocs_trigger_once():
    w = TrendWindow(k=2, window_minutes=60, window_started_at=T0)
    fired = []
    for i, host in enumerate(["a.com", "b.com", "a.com", "c.com", "c.com", "c.com"]):
        fired += [tr.netloc for tr in w.observe(url_tweet(host, i / 10))]
    # c.com overtakes b.com on its second mention and triggers then
    assert fired == ["a.com", "b.com", "c.com"]
    assert w.top_k_snapshot() == [("c.com", 3), ("a.com", 2)]


def test_whitelisted_netloc_never_triggers_but_is_counted():
    w = TrendWindow(k=5, whitelist={"twitter.com"}, window_started_at=T0)
    assert w.observe(url_tweet("twitter.com")) == []
    assert w.top_k_snapshot() == [("twitter.com", 1)]


def test_window_reset_clears_counts_and_allows_retrigger():
    w = TrendWindow(k=3, window_minutes=60, window_started_at=T0)
    assert [t.netloc for t in w.observe(url_tweet("a.com", 1))] == ["a.com"]
    assert w.observe(url_tweet("a.com", 30)) == []
    fired = w.observe(url_tweet("a.com", 61))
    assert [t.netloc for t in fired] == ["a.com"]
    assert w.window_started_at == T0 + timedelta(minutes=60)
    assert w.top_k_snapshot() == [("a.com", 1)]


def test_window_boundaries_stay_aligned_after_a_gap():
    w = TrendWindow(k=3, window_minutes=60, window_started_at=T0)
    w.observe(url_tweet("a.com", 0))
    w.observe(url_tweet("a.com", 60 * 5 + 7))
    assert w.window_started_at == T0 + timedelta(hours=5)


def test_malformed_urls_are_ignored():
    w = TrendWindow(k=3, window_started_at=T0)
    t = Tweet("1", "u", "x", T0, ("http://", "not a url", "http://ok.com/"))
    assert [tr.netloc for tr in w.observe(t)] == ["ok.com"]


def test_packaged_whitelist_loads():
    wl = load_whitelist()
    assert "twitter.com" in wl
    assert "dld.bz" not in wl


def test_parse_whitelist_strips_comments_and_case():
    assert parse_whitelist(["# header", "Twitter.com  # main", "", "t.co"]) == {"twitter.com", "t.co"}


def _replay(seed: int, k: int = 15, n: int = 2000, hosts: int = 100):
    rng = random.Random(seed)
    names = [f"h{i}.example" for i in range(hosts)]
    w = TrendWindow(k=k, window_minutes=60, window_started_at=T0)
    counts: dict[str, int] = {}
    for i in range(n):
        host = names[min(int(rng.paretovariate(1.2)) - 1, hosts - 1)] if rng.random() < 0.5 \
            else rng.choice(names)
        w.observe(url_tweet(host, 0, i))
        counts[host] = counts.get(host, 0) + 1
    return w, counts


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 20))
def test_snapshot_matches_brute_force(seed, k):
    w, counts = _replay(seed, k=k, n=500, hosts=60)
    assert w.top_k_snapshot() == oracle_top_k(counts, k)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["a.com", "b.com", "c.com", "d.com", "t.co"]), max_size=200),
       st.integers(1, 3))
def test_at_most_one_trigger_per_netloc_per_window(hosts, k):
    w = TrendWindow(k=k, whitelist={"t.co"}, window_started_at=T0)
    fired = []
    for i, h in enumerate(hosts):
        fired += [t.netloc for t in w.observe(url_tweet(h, 0, i))]
    assert len(fired) == len(set(fired))
    assert "t.co" not in fired
