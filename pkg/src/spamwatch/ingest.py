"""Replayable tweet sources standing in for a live streaming API.

A source URI is one of:

* a filesystem path or ``file://`` URI naming a JSON-lines file,
* ``tcp://host:port`` -- connect and read the same JSON lines off the socket,
* ``gen:<scenario.json>`` -- synthesize the stream of a scenario in memory.
"""

from __future__ import annotations

import io
import logging
import socket
from collections.abc import Iterable, Iterator
from datetime import datetime
from pathlib import Path
from typing import TextIO

from .model import ParseError, Tweet

log = logging.getLogger(__name__)


class SourceUnavailable(OSError):
    pass


class TweetStream:
    """Iterator over keyword-matching tweets from one source.

    Malformed lines and records that go back in time are skipped and counted
    in :attr:`parse_errors`; they never stop the stream.
    """

    def __init__(self, lines: Iterable[str], keyword: str = "", kind: str = "file-replay",
                 closer=None):
        self.kind = kind
        self.keyword = keyword.lower()
        self.position = 0
        self.parse_errors = 0
        self.yielded = 0
        self._lines = iter(lines)
        self._last_time: datetime | None = None
        self._closer = closer

    def __iter__(self) -> Iterator[Tweet]:
        return self

    def __next__(self) -> Tweet:
        for line in self._lines:
            self.position += 1
            if not line.strip():
                continue
            try:
                tweet = Tweet.from_line(line)
            except ParseError as exc:
                self.parse_errors += 1
                log.warning("skipping line %d: %s", self.position, exc)
                continue
            if self._last_time is not None and tweet.created_at < self._last_time:
                self.parse_errors += 1
                log.warning("skipping out-of-order tweet %s at line %d", tweet.tweet_id, self.position)
                continue
            self._last_time = tweet.created_at
            if self.keyword and self.keyword not in tweet.text.lower():
                continue
            self.yielded += 1
            return tweet
        self.close()
        raise StopIteration

    def close(self) -> None:
        if self._closer is not None:
            self._closer()
            self._closer = None

    def __enter__(self) -> TweetStream:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _open_file(path: Path) -> TextIO:
    try:
        return path.open("r", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise SourceUnavailable(f"cannot read {path}: {exc}") from exc


def _open_socket(target: str) -> tuple[TextIO, socket.socket]:
    host, _, port = target.rpartition(":")
    try:
        sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=30)
    except (OSError, ValueError) as exc:
        raise SourceUnavailable(f"cannot connect to {target}: {exc}") from exc
    reader = io.TextIOWrapper(sock.makefile("rb"), encoding="utf-8", errors="replace")
    return reader, sock


def open_stream(uri: str, keyword: str = "http") -> TweetStream:
    """Open ``uri`` and return a stream of tweets whose text contains ``keyword``.

    Matching is a case-insensitive substring test; an empty keyword passes
    everything through.
    """
    if uri.startswith("tcp://"):
        reader, sock = _open_socket(uri[len("tcp://"):])

        def closer() -> None:
            reader.close()
            sock.close()

        return TweetStream(reader, keyword, kind="socket", closer=closer)
    if uri.startswith(("gen:", "generator:")):
        from .synthetic import ScenarioSpec, generate_world

        spec_path = Path(uri.split(":", 1)[1])
        if not spec_path.exists():
            raise SourceUnavailable(f"no scenario file {spec_path}")
        world = generate_world(ScenarioSpec.from_file(spec_path))
        return TweetStream((t.to_line() for t in world.stream), keyword, kind="generator")
    path = Path(uri[len("file://"):] if uri.startswith("file://") else uri)
    handle = _open_file(path)
    return TweetStream(handle, keyword, kind="file-replay", closer=handle.close)


def collect_n(stream: Iterable[Tweet], n: int) -> list[Tweet]:
    """Take the first ``n`` tweets, or everything if the source ends sooner."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out: list[Tweet] = []
    for tweet in stream:
        out.append(tweet)
        if len(out) >= n:
            break
    return out


def matches(tweet: Tweet, keyword: str) -> bool:
    return keyword.lower() in tweet.text.lower()
