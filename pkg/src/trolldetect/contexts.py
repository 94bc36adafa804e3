"""Fixed-duration context windows over the event stream."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .parser import BUTTONS, MODES, ChatEvent, Kind

ANARCHY, DEMOCRACY = MODES
_BUTTON_INDEX = {b: i for i, b in enumerate(BUTTONS)}

CSV_HEADER = (
    ["window_start_ms", "duration_s"]
    + list(BUTTONS)
    + list(MODES)
    + ["spam_count", "total_messages", "mode_in_effect", "goal_ranking"]
)


def rank_goals(button_counts: dict[str, int]) -> tuple[str, ...]:
    """All eight buttons, most frequent first; ties broken in lexicographic order."""
    # BUTTONS is already lexicographic and sorted() is stable
    return tuple(sorted(BUTTONS, key=lambda b: -button_counts.get(b, 0)))


@dataclass(frozen=True)
class Context:
    window_start_ms: int
    duration_s: int
    button_counts: dict[str, int]
    mode_vote_counts: dict[str, int]
    total_messages: int
    spam_count: int
    goal_ranking: tuple[str, ...]
    mode_in_effect: str

    @property
    def window_end_ms(self) -> int:
        return self.window_start_ms + self.duration_s * 1000

    def top(self, k: int) -> tuple[str, ...]:
        return self.goal_ranking[:k]

    def bottom(self, k: int) -> tuple[str, ...]:
        return self.goal_ranking[-k:]

    def csv_row(self) -> list:
        return (
            [self.window_start_ms, self.duration_s]
            + [self.button_counts[b] for b in BUTTONS]
            + [self.mode_vote_counts[m] for m in MODES]
            + [self.spam_count, self.total_messages, self.mode_in_effect, "-".join(self.goal_ranking)]
        )


@dataclass
class ModeState:
    current_mode: str = ANARCHY
    vote_share_threshold: float = 0.75

    def __post_init__(self):
        if self.current_mode not in MODES:
            raise ValueError(f"unknown mode {self.current_mode!r}")
        if not 0.5 < self.vote_share_threshold <= 1.0:
            raise ValueError("vote_share_threshold must lie in (0.5, 1.0]")


def update_mode(state: ModeState, context: Context) -> str:
    """Mode that follows ``context``: flips when the opposite side wins enough of its votes."""
    total = sum(context.mode_vote_counts.values())
    if total < 1:
        return state.current_mode
    opposite = DEMOCRACY if state.current_mode == ANARCHY else ANARCHY
    if context.mode_vote_counts.get(opposite, 0) / total >= state.vote_share_threshold:
        return opposite
    return state.current_mode


@dataclass
class _OpenWindow:
    start_ms: int
    events: list[ChatEvent] = field(default_factory=list)


class ContextBuilder:
    """Incremental window assembler shared by the batch and online paths.

    Windows are aligned to multiples of ``duration_s`` on the epoch, so the
    same log always produces the same windows. Events that land in a window
    that was already finalized are dropped and counted in ``late_events``.
    """

    def __init__(self, duration_s: int = 20, mode_state: ModeState | None = None):
        if duration_s <= 0:
            raise ValueError("duration_s must be positive")
        self.duration_s = int(duration_s)
        self.duration_ms = self.duration_s * 1000
        self.mode_state = mode_state if mode_state is not None else ModeState()
        self.late_events = 0
        self._open: _OpenWindow | None = None

    @property
    def open_window_start(self) -> int | None:
        return None if self._open is None else self._open.start_ms

    def _align(self, ts: int) -> int:
        return ts - ts % self.duration_ms

    def _finalize(self) -> tuple[Context, list[ChatEvent]]:
        window = self._open
        buttons = dict.fromkeys(BUTTONS, 0)
        votes = dict.fromkeys(MODES, 0)
        spam = 0
        for ev in window.events:
            kind = ev.message_class.kind
            if kind is Kind.BUTTON:
                buttons[ev.message_class.command] += 1
            elif kind is Kind.MODE_VOTE:
                votes[ev.message_class.command] += 1
            else:
                spam += 1
        ctx = Context(
            window_start_ms=window.start_ms,
            duration_s=self.duration_s,
            button_counts=buttons,
            mode_vote_counts=votes,
            total_messages=len(window.events),
            spam_count=spam,
            goal_ranking=rank_goals(buttons),
            mode_in_effect=self.mode_state.current_mode,
        )
        self.mode_state.current_mode = update_mode(self.mode_state, ctx)
        self._open = _OpenWindow(window.start_ms + self.duration_ms)
        return ctx, window.events

    def advance(self, now_ms: int) -> list[tuple[Context, list[ChatEvent]]]:
        """Finalize every open window that closes at or before ``now_ms``."""
        done = []
        while self._open is not None and self._open.start_ms + self.duration_ms <= now_ms:
            done.append(self._finalize())
        return done

    def push(self, event: ChatEvent) -> list[tuple[Context, list[ChatEvent]]]:
        ts = event.timestamp_ms
        if self._open is None:
            self._open = _OpenWindow(self._align(ts))
        elif ts < self._open.start_ms:
            self.late_events += 1
            return []
        done = self.advance(ts)
        self._open.events.append(event)
        return done

    def flush(self) -> list[tuple[Context, list[ChatEvent]]]:
        """Finalize the partially filled window, if any."""
        if self._open is None or not self._open.events:
            self._open = None
            return []
        done = [self._finalize()]
        self._open = None
        return done


def iter_windows(
    events: Iterable[ChatEvent], duration_s: int = 20, mode_state: ModeState | None = None
) -> Iterator[tuple[Context, list[ChatEvent]]]:
    builder = ContextBuilder(duration_s, mode_state)
    for ev in events:
        yield from builder.push(ev)
    yield from builder.flush()


def build_contexts(
    events: Iterable[ChatEvent], duration_s: int = 20, mode_state: ModeState | None = None
) -> list[Context]:
    return [ctx for ctx, _ in iter_windows(events, duration_s, mode_state)]


def spam_moving_average(
    events: Sequence[ChatEvent], period_s: int = 1, window_periods: int = 20
) -> tuple[np.ndarray, np.ndarray]:
    """Trailing mean of the per-period spam fraction.

    Returns ``(period_start_ms, average)``; the first value is emitted once a
    full ``window_periods`` history exists. Empty periods contribute 0.
    """
    if not events:
        return np.empty(0, dtype=np.int64), np.empty(0)
    period_ms = period_s * 1000
    ts = np.fromiter((e.timestamp_ms for e in events), dtype=np.int64, count=len(events))
    is_spam = np.fromiter((e.message_class.kind is Kind.SPAM for e in events), dtype=bool, count=len(events))
    origin = ts.min() - ts.min() % period_ms
    slot = (ts - origin) // period_ms
    n = int(slot.max()) + 1
    totals = np.bincount(slot, minlength=n)
    spam = np.bincount(slot[is_spam], minlength=n)
    frac = np.divide(spam, totals, out=np.zeros(n), where=totals > 0)
    if n < window_periods:
        return np.empty(0, dtype=np.int64), np.empty(0)
    csum = np.concatenate(([0.0], np.cumsum(frac)))
    avg = (csum[window_periods:] - csum[:-window_periods]) / window_periods
    starts = origin + np.arange(window_periods - 1, n, dtype=np.int64) * period_ms
    return starts, avg
