from datetime import timedelta

import pytest

from spamwatch.scheduler import DEFAULT_SHORTENERS, DuplicateKeyword, Job, Schedule
from spamwatch.trend import Trigger

from conftest import T0


def test_default_config_monitors_seven_shorteners_daily():
    s = Schedule.from_config(None, T0)
    jobs = s.jobs()
    assert [j.keyword for j in jobs] == sorted(DEFAULT_SHORTENERS)
    assert len(jobs) == 7
    assert all(j.interval == timedelta(hours=24) and j.tweets_per_run == 30_000 for j in jobs)
    assert all(j.next_due == T0 + timedelta(hours=24) for j in jobs)


def test_due_jobs_run_once_and_advance_on_grid():
    s = Schedule([Job("bit.ly", timedelta(seconds=100), T0 + timedelta(seconds=100))])
    assert s.due_jobs(T0 + timedelta(seconds=99)) == []
    due = s.due_jobs(T0 + timedelta(seconds=250))
    assert len(due) == 1
    assert due[0].next_due == T0 + timedelta(seconds=100)
    assert s.jobs()[0].next_due == T0 + timedelta(seconds=300)
    assert s.due_jobs(T0 + timedelta(seconds=250)) == []


def test_due_jobs_sorted_by_slot_then_keyword():
    s = Schedule([
        Job("b.com", timedelta(hours=1), T0 + timedelta(minutes=10)),
        Job("a.com", timedelta(hours=1), T0 + timedelta(minutes=10)),
        Job("c.com", timedelta(hours=1), T0 + timedelta(minutes=5)),
    ])
    assert [j.keyword for j in s.due_jobs(T0 + timedelta(hours=1))] == ["c.com", "a.com", "b.com"]


def test_trigger_adds_immediate_job_and_rejects_duplicates():
    s = Schedule.from_config([{"keyword": "dld.bz"}], T0)
    fired = T0 + timedelta(hours=3)
    job = s.add_keyword(Trigger("twitbr.tk", 12, fired))
    assert job.origin == "trend-trigger"
    assert job.next_due == fired
    assert "twitbr.tk" in s and len(s) == 2
    assert [j.keyword for j in s.due_jobs(fired)] == ["twitbr.tk"]
    with pytest.raises(DuplicateKeyword):
        s.add_keyword(Trigger("twitbr.tk", 20, fired))
    with pytest.raises(DuplicateKeyword):
        s.add_keyword(Trigger("dld.bz", 20, fired))


def test_custom_intervals_from_config():
    s = Schedule.from_config([{"keyword": "x.com", "interval_hours": 6, "tweets_per_run": 10}], T0)
    (job,) = s.jobs()
    assert job.interval == timedelta(hours=6) and job.tweets_per_run == 10
    assert s.next_due() == T0 + timedelta(hours=6)


def test_bad_jobs_are_rejected():
    with pytest.raises(ValueError):
        Job("x", timedelta(0), T0)
    with pytest.raises(ValueError):
        Job("x", timedelta(hours=1), T0, tweets_per_run=0)
    with pytest.raises(DuplicateKeyword):
        Schedule([Job("x", timedelta(hours=1), T0), Job("x", timedelta(hours=2), T0)])
