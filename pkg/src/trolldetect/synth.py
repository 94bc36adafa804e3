"""Labelled synthetic chat streams.

A goal script says which button the crowd is trying to press at each moment,
and optionally pushes the crowd's mode votes one way. Users then sample
messages from their :class:`BehaviorProfile`. Contexts built from the
result find their top goals from what the crowd actually typed.

Behaviour defaults are calibration choices that give separable trolls; they
are not measured from real chat data.
"""

from __future__ import annotations

import csv
import random
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence, TextIO

from .contexts import ANARCHY, DEMOCRACY, Context, ModeState, update_mode
from .parser import BUTTONS, ChatEvent, classify_message, format_event

PERSISTENT, RAID = "persistent", "raid"
TROLL, NORMAL = "troll", "normal"

# the menu chain a player needs to cut a bush; START is the right move here
SEQUENCE_1 = ("down", "start", "up", "up", "a", "up", "a", "down", "down", "a")

SPAM_LINES = (
    "Praise Helix!", "lol", "why are we in the menu again", "DansGame", "go left pls",
    "Kappa", "this is chaos", "RIOT", "helix guide us", "we did it reddit",
)
START_EPOCH_MS = 1392365760000  # 2014-02-14 08:16:00


@dataclass(frozen=True)
class BehaviorProfile:
    goal_follow_prob: float = 0.8
    spam_rate: float = 0.25
    start_rate: float = 0.02
    anarchy_vote_bias: float = 0.5
    session_pattern: str = PERSISTENT
    message_rate: float = 6.0  # messages per minute while active
    vote_rate: float = 0.08  # share of non-spam messages that are mode votes

    def __post_init__(self):
        for name in ("goal_follow_prob", "spam_rate", "start_rate", "anarchy_vote_bias", "vote_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.message_rate <= 0:
            raise ValueError("message_rate must be positive")
        if self.session_pattern not in (PERSISTENT, RAID):
            raise ValueError(f"unknown session pattern {self.session_pattern!r}")


NORMAL_BEHAVIOR = BehaviorProfile()
TROLL_BEHAVIOR = BehaviorProfile(
    goal_follow_prob=0.1, start_rate=0.25, anarchy_vote_bias=0.95,
    session_pattern=RAID, message_rate=12.0, vote_rate=0.3,
)


@dataclass(frozen=True)
class Segment:
    """``goals`` are held ``step_s`` seconds each, cycling if the segment is longer."""

    duration_s: int
    goals: tuple[str, ...]
    step_s: int = 20
    drive: str | None = None  # mode the crowd campaigns for during this segment


@dataclass(frozen=True)
class GoalScript:
    segments: tuple[Segment, ...]

    @property
    def period_s(self) -> int:
        return sum(s.duration_s for s in self.segments)

    def at(self, offset_s: float) -> tuple[str, str | None]:
        """(goal button, drive) at ``offset_s`` seconds into the stream; the script repeats."""
        t = offset_s % self.period_s
        for seg in self.segments:
            if t < seg.duration_s:
                return seg.goals[int(t // seg.step_s) % len(seg.goals)], seg.drive
            t -= seg.duration_s
        raise AssertionError("unreachable")

    def contains_sequence_1(self) -> bool:
        return any(tuple(s.goals) == SEQUENCE_1 for s in self.segments)


DEFAULT_SCRIPT = GoalScript((
    Segment(40, ("left", "up"), drive=ANARCHY),
    Segment(160, ("up", "right", "up", "left", "down", "left", "up", "right")),
    Segment(200, SEQUENCE_1),
    Segment(40, ("a", "b"), drive=DEMOCRACY),
    Segment(160, ("a", "a", "b", "a", "down", "a", "up", "a")),
))


@dataclass(frozen=True)
class Scenario:
    n_users: int = 1000
    troll_fraction: float = 0.01
    duration_s: int = 3600
    script: GoalScript = DEFAULT_SCRIPT
    seed: int = 0
    normal: BehaviorProfile = NORMAL_BEHAVIOR
    troll: BehaviorProfile = TROLL_BEHAVIOR
    window_s: int = 20
    start_ms: int = START_EPOCH_MS
    vote_share_threshold: float = 0.75
    user_prefix: str = "user"

    def __post_init__(self):
        if not 0.0 <= self.troll_fraction <= 1.0:
            raise ValueError("troll_fraction must lie in [0, 1]")
        if self.n_users < 0 or self.duration_s <= 0:
            raise ValueError("n_users must be >= 0 and duration_s > 0")


@dataclass(frozen=True)
class SyntheticUser:
    username: str
    label: str
    behavior: BehaviorProfile


@dataclass
class SyntheticStream:
    events: list[ChatEvent]
    users: list[SyntheticUser]
    mode_timeline: list[str] = field(default_factory=list)

    @property
    def truth(self) -> dict[str, str]:
        return {u.username: u.label for u in self.users}


def make_users(scenario: Scenario) -> list[SyntheticUser]:
    width = max(5, len(str(scenario.n_users)))
    names = [f"{scenario.user_prefix}{i:0{width}d}" for i in range(scenario.n_users)]
    n_trolls = round(scenario.troll_fraction * scenario.n_users)
    trolls = set(random.Random(f"{scenario.seed}:trolls").sample(names, n_trolls))
    return [
        SyntheticUser(n, TROLL, scenario.troll) if n in trolls else SyntheticUser(n, NORMAL, scenario.normal)
        for n in names
    ]


def _user_rng(seed: int, username: str) -> random.Random:
    # string seeds hash through SHA-512, so this is stable across runs and platforms
    return random.Random(f"{seed}:{username}")


def _pick_button(rng: random.Random, b: BehaviorProfile, goal: str) -> str:
    if rng.random() < b.goal_follow_prob:
        return goal
    if goal != "start" and rng.random() < b.start_rate:
        return "start"
    others = [x for x in BUTTONS if x != goal]
    return others[rng.randrange(len(others))]


def _pick_vote(rng: random.Random, b: BehaviorProfile, drive: str | None, label: str) -> str:
    if drive is not None and label == NORMAL:
        # campaigns override personal preference for most of the crowd
        return drive if rng.random() < 0.9 else (DEMOCRACY if drive == ANARCHY else ANARCHY)
    return ANARCHY if rng.random() < b.anarchy_vote_bias else DEMOCRACY


def _user_window(
    rng: random.Random, user: SyntheticUser, script: GoalScript, t0_ms: int, start_ms: int, span_ms: int
) -> list[ChatEvent]:
    b = user.behavior
    out = []
    mean_gap_ms = 60_000.0 / b.message_rate
    t = t0_ms + rng.expovariate(1.0 / mean_gap_ms)
    while t < t0_ms + span_ms:
        ts = int(t)
        goal, drive = script.at((ts - start_ms) / 1000.0)
        u = rng.random()
        if u < b.spam_rate:
            msg = SPAM_LINES[rng.randrange(len(SPAM_LINES))]
        elif rng.random() < b.vote_rate:
            msg = _pick_vote(rng, b, drive, user.label)
        else:
            msg = _pick_button(rng, b, goal)
            # people type commands in whatever case they like
            if rng.random() < 0.3:
                msg = msg.upper()
        out.append(ChatEvent(ts, user.username, classify_message(msg), msg))
        t += rng.expovariate(1.0 / mean_gap_ms)
    return out


def generate_stream(
    scenario: Scenario,
    users: Sequence[SyntheticUser] | None = None,
    mode_timeline: Sequence[str] | None = None,
) -> SyntheticStream:
    """Generate a time-ordered event stream plus ground truth.

    Windows are produced in time order so the generator can track which
    mode is in effect (raid users only speak under democracy). Each user draws
    from a private RNG keyed by seed and username. Passing ``mode_timeline``
    (one mode per window) replaces the simulated mode machine.
    """
    if users is None:
        users = make_users(scenario)
    rngs = {u.username: _user_rng(scenario.seed, u.username) for u in users}
    mode = ModeState(ANARCHY, scenario.vote_share_threshold)
    span_ms = scenario.window_s * 1000
    start = scenario.start_ms - scenario.start_ms % span_ms
    end = scenario.start_ms + scenario.duration_s * 1000
    events: list[ChatEvent] = []
    timeline = []
    t0 = start
    while t0 < end:
        if mode_timeline is not None:
            mode.current_mode = mode_timeline[len(timeline)]
        window_events = []
        for user in users:
            if user.behavior.session_pattern == RAID and mode.current_mode != DEMOCRACY:
                continue
            evs = _user_window(rngs[user.username], user, scenario.script, t0,
                               scenario.start_ms, min(span_ms, end - t0))
            window_events.extend(e for e in evs if e.timestamp_ms >= scenario.start_ms)
        timeline.append(mode.current_mode)
        votes = {ANARCHY: 0, DEMOCRACY: 0}
        for e in window_events:
            if e.message_class.is_mode_vote:
                votes[e.message_class.command] += 1
        tally = Context(t0, scenario.window_s, {}, votes, 0, 0, (), mode.current_mode)
        mode.current_mode = update_mode(mode, tally)
        window_events.sort(key=lambda e: (e.timestamp_ms, e.username))
        events.extend(window_events)
        t0 += span_ms
    return SyntheticStream(events, list(users), timeline)


def probe_accounts(n_trolls: int = 2, n_normals: int = 2, troll: BehaviorProfile = TROLL_BEHAVIOR,
                   normal: BehaviorProfile = NORMAL_BEHAVIOR) -> list[SyntheticUser]:
    """Owned test accounts acting out a known role."""
    return (
        [SyntheticUser(f"probe_troll{i}", TROLL, troll) for i in range(n_trolls)]
        + [SyntheticUser(f"probe_normal{i}", NORMAL, normal) for i in range(n_normals)]
    )


def generate_probe_stream(
    scenario: Scenario, probes: Sequence[SyntheticUser], mode_timeline: Sequence[str]
) -> SyntheticStream:
    """Events of the probe accounts alone, following a live stream's mode timeline."""
    return generate_stream(scenario, probes, mode_timeline)


def serialize_stream(events: Sequence[ChatEvent]) -> list[str]:
    return [format_event(e) for e in events]


def write_stream(events: Sequence[ChatEvent], fh: TextIO) -> None:
    for e in events:
        fh.write(format_event(e))
        fh.write("\n")


def write_truth(users: Sequence[SyntheticUser], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    fields = list(asdict(BehaviorProfile()))
    w.writerow(["username", "label", *fields])
    for u in users:
        params = asdict(u.behavior)
        w.writerow([u.username, u.label, *(params[f] for f in fields)])


def with_behavior(scenario: Scenario, **changes) -> Scenario:
    """Copy of ``scenario`` with normal-user behaviour fields replaced."""
    return replace(scenario, normal=replace(scenario.normal, **changes))
