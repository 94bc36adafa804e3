"""Online detection over a live or replayed line stream.

Stream time (event timestamps) drives everything: windows close when an
event beyond them arrives, and a re-cluster runs each time a finalized
window reaches the next ``recluster_interval_s`` boundary. Re-clustering
works on an immutable feature snapshot, optionally on a worker thread, and
publishes each epoch's labels in one reference swap.
"""

from __future__ import annotations

import heapq
import json
import logging
import socket
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Iterator, Mapping, TextIO

from .config import EngineConfig
from .contexts import Context, ContextBuilder
from .parser import ChatEvent, ParseStats, parse_stream
from .pipeline import mode_state_for, score_snapshot
from .profiles import FeatureSnapshot, UserProfile, ingest_context, snapshot_profiles
from .scoring import NORMAL, PopulationTooSmall

log = logging.getLogger(__name__)

Sink = Callable[[dict], None]


@dataclass(frozen=True)
class RelabelEvent:
    username: str
    old_label: str
    new_label: str
    recluster_epoch: int
    anomaly_score: float

    def to_dict(self) -> dict:
        return {"type": "relabel", **asdict(self)}


@dataclass(frozen=True)
class Epoch:
    number: int
    cut_ms: int
    labels: Mapping[str, str]
    relabels: tuple[RelabelEvent, ...]


class JsonLinesSink:
    """Writes each engine event as one JSON line; safe to call from several threads."""

    def __init__(self, fh: TextIO):
        self._fh = fh
        self._lock = threading.Lock()

    def __call__(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()


class OnlineEngine:
    def __init__(self, config: EngineConfig = EngineConfig(), sink: Sink | None = None,
                 background: bool = False):
        self.config = config
        self.sink = sink if sink is not None else (lambda event: None)
        self.builder = ContextBuilder(config.context_duration_s, mode_state_for(config))
        self.profiles: dict[str, UserProfile] = {}
        self.epochs: list[Epoch] = []
        # (window_end_ms, stream time at which the window's events entered the profiles)
        self.ingest_log: list[tuple[int, int]] = []
        self.stream_time_ms: int | None = None
        self._interval_ms = config.recluster_interval_s * 1000
        self._next_boundary: int | None = None
        self._labels: Mapping[str, str] = {}
        self._publish_lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=1) if background else None
        self._pending: list[Future] = []
        self._epoch_counter = 0
        self._closed = False

    @property
    def labels(self) -> Mapping[str, str]:
        """Labels of the latest published epoch."""
        return self._labels

    # ingestion -----------------------------------------------------------

    def process_event(self, event: ChatEvent) -> None:
        ts = event.timestamp_ms
        if self.stream_time_ms is None or ts > self.stream_time_ms:
            self.stream_time_ms = ts
        if self._next_boundary is None:
            self._next_boundary = ts - ts % self._interval_ms + self._interval_ms
        self._take(self.builder.push(event))

    def advance(self, now_ms: int) -> None:
        """Move stream time forward without an event (wall-clock ticks)."""
        if self.stream_time_ms is None or now_ms <= self.stream_time_ms:
            return
        self.stream_time_ms = now_ms
        self._take(self.builder.advance(now_ms))

    def _take(self, done: list[tuple[Context, list[ChatEvent]]]) -> None:
        for ctx, window in done:
            ingest_context(self.profiles, ctx, window)
            self.ingest_log.append((ctx.window_end_ms, self.stream_time_ms))
            if ctx.window_end_ms >= self._next_boundary:
                self.recluster(ctx.window_end_ms)
                while self._next_boundary <= ctx.window_end_ms:
                    self._next_boundary += self._interval_ms

    def close(self) -> None:
        """Flush the partial window, run the terminal re-cluster, wait for workers."""
        if self._closed:
            return
        self._closed = True
        done = self.builder.flush()
        self._take_without_boundary(done)
        if self.stream_time_ms is not None:
            cut = done[-1][0].window_end_ms if done else self.stream_time_ms
            self.recluster(cut)
        self.wait()
        if self._pool is not None:
            self._pool.shutdown(wait=True)

    def _take_without_boundary(self, done) -> None:
        for ctx, window in done:
            ingest_context(self.profiles, ctx, window)
            self.ingest_log.append((ctx.window_end_ms, self.stream_time_ms))

    def wait(self) -> None:
        for fut in self._pending:
            fut.result()
        self._pending.clear()

    # re-clustering ---------------------------------------------------------

    def recluster(self, cut_ms: int | None = None) -> None:
        """Snapshot the profiles now and score them as a new epoch."""
        if cut_ms is None:
            cut_ms = self.stream_time_ms if self.stream_time_ms is not None else 0
        self._epoch_counter += 1
        snapshot = snapshot_profiles(self.profiles, self.config.min_messages)
        if self._pool is None:
            self._recluster(snapshot, self._epoch_counter, cut_ms)
        else:
            self._pending.append(self._pool.submit(self._recluster, snapshot, self._epoch_counter, cut_ms))

    def _recluster(self, snapshot: FeatureSnapshot, epoch: int, cut_ms: int) -> None:
        board = {"type": "scoreboard", "recluster_epoch": epoch, "cut_ms": cut_ms, "n": len(snapshot)}
        scores = None
        if len(snapshot):
            try:
                scores = score_snapshot(snapshot, self.config)
            except PopulationTooSmall as exc:
                board["skipped"] = str(exc)
        else:
            board["skipped"] = "no eligible users"
        labels = scores.labels() if scores is not None else {}
        score_of = dict(zip(scores.usernames, scores.scores.tolist())) if scores is not None else {}

        old = self._labels
        relabels = []
        for name in sorted(set(old) | set(labels)):
            before, after = old.get(name, NORMAL), labels.get(name, NORMAL)
            if before != after:
                relabels.append(RelabelEvent(name, before, after, epoch, score_of.get(name, 0.0)))

        if scores is not None:
            board.update(scores.summary())
            board["users"] = [asdict(u) for u in scores.scored_users()]
        with self._publish_lock:
            self._labels = labels
            self.epochs.append(Epoch(epoch, cut_ms, labels, tuple(relabels)))
        for ev in relabels:
            self.sink(ev.to_dict())
        self.sink(board)

    def run_events(self, events: Iterable[ChatEvent]) -> OnlineEngine:
        for ev in events:
            self.process_event(ev)
        self.close()
        return self


def run_online(
    source: Iterable[str | bytes | None],
    config: EngineConfig = EngineConfig(),
    sink: Sink | None = None,
    background: bool = False,
    clock: Callable[[], float] = time.monotonic,
    engine: OnlineEngine | None = None,
) -> OnlineEngine:
    """Drive an engine from a line source until it ends.

    ``None`` items in ``source`` are idle ticks: stream time advances by the
    wall-clock time elapsed since the last event so that quiet periods still
    close windows on schedule.
    """
    if engine is None:
        engine = OnlineEngine(config, sink, background)
    stats = ParseStats()
    last_wall = None

    def lines():
        nonlocal last_wall
        for item in source:
            if item is None:
                if engine.stream_time_ms is not None and last_wall is not None:
                    elapsed = int((clock() - last_wall) * 1000)
                    engine.advance(engine.stream_time_ms + elapsed)
                    last_wall = clock()
                continue
            yield item

    for ev in parse_stream(lines(), stats):
        engine.process_event(ev)
        last_wall = clock()
    engine.close()
    engine.sink({"type": "parse_stats", **asdict(stats), "late_events": engine.builder.late_events})
    return engine


def inject_probe_users(
    probe_events: Iterable[ChatEvent], live_events: Iterable[ChatEvent]
) -> Iterator[ChatEvent]:
    """Merge probe-account events into a live event stream by timestamp.

    On equal timestamps the live event comes first, so the merge is
    deterministic.
    """
    return heapq.merge(live_events, probe_events, key=lambda e: e.timestamp_ms)


def replay_lines(path: str, speed: float = 0.0, sleep: Callable[[float], None] = time.sleep) -> Iterator[str]:
    """Lines of a recorded log; with ``speed > 0`` gaps are slept through at that multiple."""
    from .parser import MalformedLine, parse_record

    prev = None
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            if speed > 0:
                try:
                    ts = parse_record(line).timestamp_ms
                except MalformedLine:
                    ts = None
                if ts is not None:
                    if prev is not None and ts > prev:
                        sleep((ts - prev) / 1000 / speed)
                    prev = ts if prev is None else max(prev, ts)
            yield line


def tcp_lines(
    host: str,
    port: int,
    tick_s: float = 1.0,
    max_retries: int = 5,
    backoff_s: float = 0.5,
    on_error: Callable[[dict], None] | None = None,
    ready: threading.Event | None = None,
) -> Iterator[str | None]:
    """Serve one client at a time on ``host:port`` and yield its lines.

    Yields ``None`` every ``tick_s`` of silence. The stream ends when a client
    disconnects cleanly; socket errors are reported through ``on_error`` and
    the listener is re-opened with exponential backoff up to ``max_retries``.
    """
    attempt = 0
    while True:
        try:
            with socket.create_server((host, port), reuse_port=False) as server:
                if ready is not None:
                    ready.set()
                conn, addr = server.accept()
                log.info("client connected from %s", addr)
                with conn:
                    conn.settimeout(tick_s)
                    buf = b""
                    while True:
                        try:
                            chunk = conn.recv(65536)
                        except socket.timeout:
                            yield None
                            continue
                        if not chunk:
                            break
                        buf += chunk
                        *complete, buf = buf.split(b"\n")
                        for raw in complete:
                            yield raw.decode("utf-8", errors="replace")
                    if buf:
                        yield buf.decode("utf-8", errors="replace")
                return
        except OSError as exc:
            attempt += 1
            if on_error is not None:
                on_error({"type": "error", "message": str(exc), "attempt": attempt})
            if attempt > max_retries:
                raise
            time.sleep(backoff_s * 2 ** (attempt - 1))
