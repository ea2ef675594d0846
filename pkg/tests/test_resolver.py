import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spamwatch.model import extract_netloc
from spamwatch.resolver import (
    HttpResponse,
    NavigationError,
    NetworkError,
    ResolvedUrl,
    SyntheticHttpClient,
    SyntheticNavigator,
    SyntheticWeb,
    UrllibHttpClient,
    UrllibNavigator,
    classify_url,
    find_client_redirect,
    follow_redirects,
)
from spamwatch.synthetic import ARCHETYPE_URLS, build_synthetic_web, random_web
from spamwatch.webserver import SyntheticWebServer


@pytest.fixture(scope="module")
def web():
    return build_synthetic_web(chain_depth=7)


def _classify(web, url, **kw):
    return classify_url(url, SyntheticHttpClient(web), SyntheticNavigator(web), **kw)


def test_safe_site_is_clean(web):
    r = _classify(web, ARCHETYPE_URLS["safe"])
    assert (r.has_secret_url, r.is_phishing, r.status) == (False, False, "ok")
    assert r.num_retries == 1


def test_phishing_site(web):
    r = _classify(web, ARCHETYPE_URLS["phishing"])
    assert (r.has_secret_url, r.is_phishing) == (False, True)
    assert extract_netloc(r.landing_full).netloc == "malware.example"


def test_secret_url_truth_table(web):
    r = _classify(web, ARCHETYPE_URLS["secret"])
    assert r.final_url.netloc == "vidisp.review"
    assert extract_netloc(r.landing_bare).netloc == "google.com"
    assert extract_netloc(r.landing_full).netloc == "spam.example"
    assert (r.has_secret_url, r.is_phishing) == (True, True)


def test_chain_stops_after_five_requests(web):
    http = SyntheticHttpClient(web)
    res = follow_redirects(ARCHETYPE_URLS["chain"], http, max_retry=5)
    assert len(http.log) == 5
    assert res.num_retries == 5
    assert res.final.geturl() == "http://chain.example/hop/5"


def test_short_chain_resolves_fully():
    web = build_synthetic_web(chain_depth=2)
    res = follow_redirects("http://chain.example/hop/0", SyntheticHttpClient(web))
    assert res.final.geturl() == "http://chain.example/hop/2"
    assert [c for _, c in res.chain] == [301, 301, 200]


def test_only_301_continues_by_default():
    web = SyntheticWeb({"a.com/x": {"server_redirect": "http://b.com/", "status": 302},
                        "b.com": {"page": "hi"}})
    res = follow_redirects("http://a.com/x", SyntheticHttpClient(web))
    assert res.final.geturl() == "http://b.com/"
    assert res.num_retries == 1
    res = follow_redirects("http://a.com/x", SyntheticHttpClient(web), redirect_codes=frozenset({302}))
    assert res.num_retries == 2


def test_network_error_marks_resolution_failed():
    web = SyntheticWeb({"a.com": {"server_redirect": "http://gone.example/"}})
    r = _classify(web, "http://a.com/")
    assert r.status == "failed"
    assert r.has_secret_url is None and r.is_phishing is None
    assert r.chain[-1] == ("http://gone.example/", None)


def test_navigation_failure_is_indeterminate():
    web = SyntheticWeb({"a.com": {"client_redirect": "http://gone.example/"}})
    r = _classify(web, "http://a.com/")
    assert r.status == "indeterminate"
    assert r.is_phishing is None


def test_navigation_loop_raises():
    web = SyntheticWeb({"a.com": {"client_redirect": "http://b.com/"},
                        "b.com": {"client_redirect": "http://a.com/"}})
    with pytest.raises(NavigationError):
        SyntheticNavigator(web).navigate("http://a.com/")


def test_unknown_path_on_known_host_is_404():
    web = SyntheticWeb({"a.com/only": {"page": "x"}})
    assert web.respond("http://a.com/other").status == 404
    with pytest.raises(NetworkError):
        web.respond("http://nowhere.example/")


def test_web_spec_round_trip(tmp_path, web):
    path = tmp_path / "web.json"
    web.save(path)
    again = SyntheticWeb.from_file(path)
    assert again.to_json() == web.to_json()


def test_client_redirect_detection_in_html():
    assert find_client_redirect('<meta http-equiv="refresh" content="0;url=http://x.com/a">') == "http://x.com/a"
    assert find_client_redirect("<script>window.location = 'http://y.com/'</script>") == "http://y.com/"
    assert find_client_redirect("<html>plain</html>") is None


def test_resolved_url_json_round_trip(web):
    r = _classify(web, ARCHETYPE_URLS["secret"])
    assert ResolvedUrl.from_json(r.to_json()) == r
    assert r.malicious


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_secret_url_implies_phishing(seed):
    web, urls = random_web(random.Random(seed))
    for url in urls:
        r = _classify(web, url)
        if r.has_secret_url:
            assert r.is_phishing


class _Scripted:
    """HTTP client answering from a fixed list, for loop-boundary checks."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def get(self, url):
        self.calls += 1
        return self.responses.pop(0)


def test_loop_always_issues_at_least_one_get():
    http = _Scripted([HttpResponse(200, "http://a.com/")])
    res = follow_redirects("http://a.com/", http)
    assert http.calls == 1 and res.final.netloc == "a.com"
    with pytest.raises(ValueError):
        follow_redirects("http://a.com/", http, max_retry=0)


def test_real_http_against_local_server(web):
    with SyntheticWebServer(web) as server:
        http = UrllibHttpClient(proxy=server.proxy_url, timeout=5)
        nav = UrllibNavigator(http)
        secret = classify_url(ARCHETYPE_URLS["secret"], http, nav)
        assert (secret.has_secret_url, secret.is_phishing) == (True, True)
        safe = classify_url(ARCHETYPE_URLS["safe"], http, nav)
        assert (safe.has_secret_url, safe.is_phishing) == (False, False)
        server.clear_log()
        res = follow_redirects(ARCHETYPE_URLS["chain"], http, max_retry=5)
        hops = server.hop_log
        assert len(hops) == 5
        assert [u for u, _ in hops] == [u for u, _ in res.chain]
        assert res.final.geturl() == "http://chain.example/hop/5"
