import pytest
from hypothesis import given
from hypothesis import strategies as st

from spamwatch.model import (
    Account,
    BotGroup,
    MalformedUrl,
    ParseError,
    Timeline,
    Tweet,
    canonicalize_text,
    extract_netloc,
    format_time,
    parse_time,
)

from conftest import T0, make_account, make_tweet


def test_netloc_of_shortened_link():
    u = extract_netloc("http://dld.bz/AbC12")
    assert u.netloc == "dld.bz"
    assert u.path == "/AbC12"
    assert u.geturl() == "http://dld.bz/AbC12"


def test_scheme_defaults_to_http():
    u = extract_netloc("dld.bz/x")
    assert u.scheme == "http"
    assert u.netloc == "dld.bz"


def test_netloc_keeps_port_drops_userinfo():
    u = extract_netloc("http://bob:pw@Example.COM:8080/p?q=1#frag")
    assert u.netloc == "example.com:8080"
    assert u.host == "example.com"
    assert u.query == "q=1"
    assert u.fragment == "frag"
    assert u.bare() == "http://example.com:8080/"


def test_subdomains_are_part_of_netloc():
    assert extract_netloc("https://savingzev.feedsted.us/client/x").netloc == "savingzev.feedsted.us"


@pytest.mark.parametrize("raw", ["", "   ", "http://", "not a url", "http:///path", "http://-bad-.com/"])
def test_malformed_urls_raise(raw):
    with pytest.raises(MalformedUrl):
        extract_netloc(raw)


@given(st.from_regex(r"[a-z][a-z0-9]{0,10}(\.[a-z][a-z0-9]{0,6}){1,3}", fullmatch=True),
       st.from_regex(r"(/[A-Za-z0-9]{0,6}){0,3}", fullmatch=True))
def test_netloc_is_case_insensitive(host, path):
    lower = extract_netloc(f"http://{host}{path}")
    upper = extract_netloc(f"HTTP://{host.upper()}{path}")
    assert lower.netloc == upper.netloc == host
    assert lower.path == upper.path


def test_canonicalize_collapses_whitespace_and_width():
    assert canonicalize_text("  Big\tsale\n\nnow  ") == "Big sale now"
    # fullwidth letters fold to ASCII under NFKC
    assert canonicalize_text("ＳＡＬＥ") == "SALE"


def test_canonicalize_can_strip_urls():
    assert canonicalize_text("win http://dld.bz/abc now", strip_urls=True) == "win now"
    assert canonicalize_text("win http://dld.bz/abc now") == "win http://dld.bz/abc now"


@given(st.text(max_size=80), st.booleans())
def test_canonicalize_is_idempotent(text, strip):
    once = canonicalize_text(text, strip)
    assert canonicalize_text(once, strip) == once


def test_parse_time_accepts_z_suffix():
    assert parse_time("2017-09-10T00:00:00Z") == T0
    assert format_time(T0) == "2017-09-10T00:00:00Z"


def test_account_round_trip_and_seven_fields():
    a = make_account("u1", screen_name="alice")
    obj = a.to_json()
    assert list(obj) == ["id", "screen_name", "statuses_count", "friends_count",
                         "followers_count", "lang", "created_at"]
    assert Account.from_json(obj) == a


def test_account_rejects_negative_counts():
    with pytest.raises(ValueError):
        make_account("u1", friends_count=-1)


def test_tweet_line_round_trip():
    t = make_tweet("1", "u1", "hello http://dld.bz/x", minutes=3)
    back = Tweet.from_line(t.to_line())
    assert back == t
    assert back.user == t.user
    assert back.embedded_urls == ("http://dld.bz/x",)


@pytest.mark.parametrize("line", ["{", "[]", '{"id": 1}', '{"id":1,"text":"x","created_at":"nope","user":{"id":"a"}}'])
def test_bad_tweet_lines_raise_parse_error(line):
    with pytest.raises(ParseError):
        Tweet.from_line(line)


def test_timeline_size_bounds():
    with pytest.raises(ValueError):
        Timeline("a", frozenset())
    with pytest.raises(ValueError):
        Timeline("a", frozenset(str(i) for i in range(201)))
    assert len(Timeline("a", frozenset(str(i) for i in range(200))).tweets) == 200


def test_botgroup_json_round_trip():
    g = BotGroup("g1", "dld.bz", frozenset({"a", "b"}), frozenset({"x"}),
                 extract_netloc("http://dld.bz/x"), T0, 3, 0.6, ("http://dld.bz/x",))
    assert BotGroup.from_json(g.to_json()) == g
    report = g.report(candidate_size=5)
    assert report["member_count"] == 5 and report["bot_count"] == 2
    assert report["dominant_url"] == "http://dld.bz/x"
