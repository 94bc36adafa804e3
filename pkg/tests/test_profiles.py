import copy
import io
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_event
from trolldetect.contexts import Context, iter_windows, rank_goals
from trolldetect.parser import BUTTONS, MODES
from trolldetect.profiles import (
    Ineligible,
    UserProfile,
    extract_features,
    ingest_context,
    merge_profiles,
    read_features_csv,
    sample_features,
    snapshot_profiles,
    write_features_csv,
)

T0 = 1392365760000


def _context(ranking_counts, mode="anarchy"):
    counts = {**dict.fromkeys(BUTTONS, 0), **ranking_counts}
    return Context(T0, 20, counts, dict.fromkeys(MODES, 0), 0, 0, rank_goals(counts), mode)


def test_second_goal_hits():
    ctx = _context({"a": 5, "up": 4, "b": 3})
    assert ctx.goal_ranking[:3] == ("a", "up", "b")
    profiles = ingest_context({}, ctx, [make_event(T0, "u", "up")])
    assert profiles["u"].top_hits == [0, 1, 1]
    assert profiles["u"].bottom_hits == [0, 0, 0]


def test_bottom_hits():
    ctx = _context({"a": 5})
    # ranking a, b, down, left, right, select, start, up -> bottom is up, start, select
    profiles = ingest_context({}, ctx, [make_event(T0, "u", "up"), make_event(T0, "u", "select")])
    assert profiles["u"].bottom_hits == [1, 1, 2]


def test_start_in_anarchy():
    profiles = ingest_context({}, _context({}, "anarchy"), [make_event(T0, "u", "start")])
    p = profiles["u"]
    assert (p.start_count, p.anarchy_mode_button_count, p.button_total) == (1, 1, 1)


def test_democracy_vote():
    profiles = ingest_context({}, _context({}, "democracy"), [make_event(T0, "u", "democracy")])
    p = profiles["u"]
    assert (p.mode_vote_total, p.anarchy_vote_count, p.message_total) == (1, 0, 1)


def test_feature_values():
    p = UserProfile("u", button_total=10, start_count=2, message_total=10)
    f = extract_features(p)
    assert f[5] == 0.2
    assert f[6] == 0.0  # no mode votes


def test_all_top_goal():
    p = UserProfile("u", button_total=12, message_total=12, top_hits=[12, 12, 12])
    assert extract_features(p)[:3].tolist() == [1.0, 1.0, 1.0]


def test_ineligible():
    with pytest.raises(Ineligible):
        extract_features(UserProfile("u", message_total=9))
    assert extract_features(UserProfile("u", message_total=9, spam_total=9), min_messages=9)[3] == 1.0


def _random_events(seed, n=2000, users=25, span_s=400):
    rng = random.Random(seed)
    msgs = list(BUTTONS) * 3 + list(MODES) + ["hi", "Kappa"]
    ts = sorted(T0 + rng.randrange(span_s * 1000) for _ in range(n))
    return [make_event(t, f"u{rng.randrange(users)}", rng.choice(msgs)) for t in ts]


def _profiles_from(pairs):
    profiles = {}
    for ctx, window in pairs:
        ingest_context(profiles, ctx, window)
    return profiles


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_invariants_and_feature_monotonicity(seed):
    profiles = _profiles_from(iter_windows(_random_events(seed, n=600), 20))
    for p in profiles.values():
        p.check()
        f = extract_features(p, min_messages=0)
        assert np.all((f >= 0) & (f <= 1))
        assert f[0] <= f[1] <= f[2]
        assert f[7] <= f[8] <= f[9]


def test_context_order_independence():
    pairs = list(iter_windows(_random_events(1), 20))
    forward = _profiles_from(pairs)
    shuffled = pairs[:]
    random.Random(5).shuffle(shuffled)
    assert _profiles_from(shuffled) == forward


def test_shard_merge_equals_whole():
    pairs = list(iter_windows(_random_events(2), 20))
    whole = _profiles_from(pairs)
    shards = [_profiles_from(pairs[i::3]) for i in range(3)]
    assert merge_profiles(*shards) == whole
    # associativity of the reduction
    assert merge_profiles(merge_profiles(shards[0], shards[1]), shards[2]) == \
        merge_profiles(shards[0], merge_profiles(shards[1], shards[2]))


def test_extract_is_pure():
    p = UserProfile("u", button_total=7, message_total=11, spam_total=4, top_hits=[3, 4, 5])
    before = copy.deepcopy(p)
    assert np.array_equal(extract_features(p), extract_features(p))
    assert p == before


def test_sample_features():
    idx = sample_features(1000, 100, seed=3)
    assert len(set(idx.tolist())) == 100 and np.all(np.diff(idx) > 0)
    assert np.array_equal(idx, sample_features(1000, 100, seed=3))
    assert not np.array_equal(idx, sample_features(1000, 100, seed=4))
    assert np.array_equal(sample_features(50, 100), np.arange(50))


def test_snapshot_and_csv_round_trip():
    profiles = _profiles_from(iter_windows(_random_events(3), 20))
    snap = snapshot_profiles(profiles, min_messages=10)
    assert list(snap.usernames) == sorted(u for u, p in profiles.items() if p.message_total >= 10)
    assert not snap.matrix.flags.writeable
    for i, name in enumerate(snap.usernames):
        assert np.array_equal(snap.matrix[i], extract_features(profiles[name]))
    buf = io.StringIO()
    write_features_csv(snap, buf)
    back = read_features_csv(io.StringIO(buf.getvalue()))
    assert back.usernames == snap.usernames
    assert np.array_equal(back.matrix, snap.matrix)
    assert np.array_equal(back.last_seen_ms, snap.last_seen_ms)


def test_read_features_rejects_bad_header():
    with pytest.raises(ValueError):
        read_features_csv(io.StringIO("name,x\nu,1\n"))
