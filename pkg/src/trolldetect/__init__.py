"""Contextual troll detection for crowd-played game chat streams."""

__version__ = "0.1.0"

from .config import EngineConfig, parse_config
from .contexts import Context, ContextBuilder, ModeState, build_contexts, rank_goals, spam_moving_average, update_mode
from .online import OnlineEngine, RelabelEvent, inject_probe_users, run_online
from .parser import ChatEvent, MalformedLine, MessageClass, ParseStats, RawRecord, classify_message, parse_record, parse_stream
from .pca import PcaResult, gram_matrix, gram_svd, project
from .pipeline import run_batch
from .profiles import FeatureSnapshot, Ineligible, UserProfile, extract_features, ingest_context, merge_profiles, sample_features, snapshot_profiles
from .scoring import (
    ScoredUser,
    ScorerConfig,
    dknn_distances,
    kmeans_distances,
    normalize_and_label,
    score_histogram,
    score_matrix,
    single_feature_label_rate,
    sknn_distances,
    troll_feature_distances,
)
