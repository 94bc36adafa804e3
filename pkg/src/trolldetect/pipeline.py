"""Batch pipeline: events -> contexts -> profiles -> features -> scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .config import EngineConfig
from .contexts import Context, ContextBuilder, ModeState
from .parser import ChatEvent
from .profiles import FeatureSnapshot, UserProfile, ingest_context, snapshot_profiles
from .scoring import ScoreResult, score_matrix


def mode_state_for(config: EngineConfig) -> ModeState:
    return ModeState(config.initial_mode, config.vote_share_threshold)


def build_profiles(
    events: Iterable[ChatEvent], config: EngineConfig = EngineConfig()
) -> tuple[dict[str, UserProfile], list[Context], int]:
    """Profiles, finalized contexts and the number of late (dropped) events."""
    builder = ContextBuilder(config.context_duration_s, mode_state_for(config))
    profiles: dict[str, UserProfile] = {}
    contexts: list[Context] = []

    def take(done):
        for ctx, window in done:
            ingest_context(profiles, ctx, window)
            contexts.append(ctx)

    for ev in events:
        take(builder.push(ev))
    take(builder.flush())
    return profiles, contexts, builder.late_events


def score_snapshot(snapshot: FeatureSnapshot, config: EngineConfig) -> ScoreResult:
    return score_matrix(
        snapshot.matrix, config.scorer, snapshot.usernames,
        sample_size=config.sample_size, seed=config.seed,
    )


@dataclass(frozen=True)
class BatchResult:
    profiles: dict[str, UserProfile]
    contexts: list[Context]
    snapshot: FeatureSnapshot
    scores: ScoreResult | None
    late_events: int

    def labels(self) -> dict[str, str]:
        return {} if self.scores is None else self.scores.labels()


def run_batch(events: Iterable[ChatEvent], config: EngineConfig = EngineConfig()) -> BatchResult:
    profiles, contexts, late = build_profiles(events, config)
    snapshot = snapshot_profiles(profiles, config.min_messages)
    scores = score_snapshot(snapshot, config) if len(snapshot) else None
    return BatchResult(profiles, contexts, snapshot, scores, late)
