"""Engine configuration and its JSON-file + flag resolution."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .scoring import ScorerConfig


@dataclass(frozen=True)
class EngineConfig:
    context_duration_s: int = 20
    recluster_interval_s: int = 3600
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    min_messages: int = 10
    sample_size: int = 10_000
    seed: int = 0
    vote_share_threshold: float = 0.75
    initial_mode: str = "anarchy"

    def __post_init__(self):
        if self.context_duration_s <= 0:
            raise ValueError("context_duration_s must be positive")
        if self.recluster_interval_s < self.context_duration_s:
            raise ValueError("recluster_interval_s must be at least context_duration_s")
        if self.min_messages < 0 or self.sample_size < 1:
            raise ValueError("min_messages must be >= 0 and sample_size >= 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_SCORER_KEYS = {"method", "k", "threshold"}


def parse_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> EngineConfig:
    """Resolve an :class:`EngineConfig`: defaults, then the JSON file, then overrides.

    Keys ``method``, ``k`` and ``threshold`` may appear at top level or under
    ``"scorer"``. ``None`` override values are ignored so argparse namespaces
    can be passed through directly.
    """
    merged: dict[str, Any] = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        merged.update(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    scorer_kw = dict(merged.pop("scorer", None) or {})
    for key in _SCORER_KEYS & merged.keys():
        scorer_kw[key] = merged.pop(key)
    known = {f.name for f in fields(EngineConfig)} - {"scorer"}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    cfg = EngineConfig(**merged)
    if scorer_kw:
        cfg = replace(cfg, scorer=replace(cfg.scorer, **scorer_kw))
    return cfg
