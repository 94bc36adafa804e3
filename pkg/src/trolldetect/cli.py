"""Command line entry point: ``trolldetect <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .config import EngineConfig, parse_config
from .contexts import CSV_HEADER, build_contexts
from .online import JsonLinesSink, replay_lines, run_online, tcp_lines
from .parser import ParseStats, parse_stream
from .pca import PRESETS, gram_svd, project
from .pipeline import build_profiles, mode_state_for, score_snapshot
from .profiles import read_features_csv, snapshot_profiles, write_features_csv
from .report import DEFAULT_KS, report
from .synth import Scenario, generate_stream, write_stream, write_truth

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    tool_version: str = __version__
    input_hashes: dict[str, str] = field(default_factory=dict)
    row_counts: dict[str, int] = field(default_factory=dict)

    def hash_input(self, path: str) -> None:
        h = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        self.input_hashes[str(path)] = h.hexdigest()

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_out(path: str | None):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _read_events(path: str):
    stats = ParseStats()
    with open(path, encoding="utf-8", errors="replace") as fh:
        events = list(parse_stream(fh, stats))
    return events, stats


def _config(args) -> EngineConfig:
    keys = ("context_duration_s", "recluster_interval_s", "min_messages", "sample_size", "seed",
            "vote_share_threshold", "method", "k", "threshold")
    overrides = {k: getattr(args, k, None) for k in keys}
    return parse_config(getattr(args, "config", None), overrides)


# subcommands ------------------------------------------------------------------

def cmd_parse_stats(args, manifest: RunManifest):
    _, stats = _read_events(args.log)
    print(stats.to_json())
    manifest.row_counts.update(asdict(stats))


def cmd_contexts(args, manifest):
    cfg = _config(args)
    events, stats = _read_events(args.log)
    contexts = build_contexts(events, cfg.context_duration_s, mode_state_for(cfg))
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for ctx in contexts:
            w.writerow(ctx.csv_row())
    manifest.row_counts.update(events=len(events), contexts=len(contexts))


def cmd_features(args, manifest):
    cfg = _config(args)
    events, stats = _read_events(args.log)
    profiles, contexts, late = build_profiles(events, cfg)
    for prof in profiles.values():
        prof.check()
    snap = snapshot_profiles(profiles, cfg.min_messages)
    with _open_out(args.output) as fh:
        write_features_csv(snap, fh)
    manifest.row_counts.update(events=len(events), contexts=len(contexts), users=len(profiles),
                               eligible=len(snap), late_events=late)


def _load_features(path: str):
    with open(path, newline="") as fh:
        return read_features_csv(fh)


def cmd_score(args, manifest):
    cfg = _config(args)
    snap = _load_features(args.input)
    if not len(snap):
        raise ValueError("features file has no rows")
    res = score_snapshot(snap, cfg)
    if not all(0.0 <= s <= 100.0 for s in res.scores):
        raise AssertionError("anomaly score outside [0, 100]")
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["username", "raw_distance", "anomaly_score", "label"])
        for u in res.scored_users():
            w.writerow([u.username, repr(u.raw_distance), repr(u.anomaly_score), u.label])
    summary = res.summary()
    if sum(summary["histogram"]) != res.n:
        raise AssertionError("histogram does not sum to the number of scored users")
    text = json.dumps(summary)
    if args.summary:
        Path(args.summary).write_text(text + "\n")
    else:
        print(text, file=sys.stderr if args.output in (None, "-") else sys.stdout)
    manifest.row_counts.update(users=res.n, trolls=res.trolls)


def cmd_pca(args, manifest):
    snap = _load_features(args.input)
    if not len(snap):
        raise ValueError("features file has no rows")
    res = gram_svd(snap.matrix, center=args.center)
    coords = project(snap.matrix, res, args.components)
    cols = [f"c{i + 1}" for i in PRESETS[args.components]]
    with _open_out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["username", *cols])
        for name, row in zip(snap.usernames, coords):
            w.writerow([name, *(repr(float(x)) for x in row)])
    payload = {"singular_values": res.S.tolist(), "degenerate": res.degenerate.tolist(), "centered": args.center}
    if args.singular_values:
        Path(args.singular_values).write_text(json.dumps(payload) + "\n")
    else:
        print(json.dumps(payload), file=sys.stderr if args.output in (None, "-") else sys.stdout)
    manifest.row_counts.update(users=len(snap))


def cmd_online(args, manifest):
    cfg = _config(args)
    manifest.config = cfg.to_dict()
    manifest.seed = cfg.seed
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        if not host or not port.isdigit():
            raise UsageError("--listen expects host:port")
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w")
    sink = JsonLinesSink(out)
    if args.replay:
        source = replay_lines(args.replay, args.speed)
        background = False
    else:
        source = tcp_lines(host, int(port), on_error=sink)
        background = True
    try:
        engine = run_online(source, cfg, sink, background=background)
    finally:
        if out is not sys.stdout:
            out.close()
    manifest.row_counts.update(users=len(engine.profiles), epochs=len(engine.epochs))


def cmd_synth(args, manifest):
    scenario = Scenario(n_users=args.users, troll_fraction=args.troll_fraction,
                        duration_s=args.duration, seed=args.seed)
    stream = generate_stream(scenario)
    with _open_out(args.out) as fh:
        write_stream(stream.events, fh)
    if args.truth:
        with open(args.truth, "w", newline="") as fh:
            write_truth(stream.users, fh)
    manifest.seed = args.seed
    manifest.config = {"users": args.users, "troll_fraction": args.troll_fraction, "duration_s": args.duration}
    manifest.row_counts.update(events=len(stream.events), users=len(stream.users))


def cmd_report(args, manifest):
    cfg = _config(args)
    snap = _load_features(args.input)
    events = _read_events(args.log)[0] if args.log else None
    thresholds = args.single_thresholds or [0.5] * 10
    if len(thresholds) != 10:
        raise UsageError("--single-thresholds needs exactly 10 values")
    summary = report(snap, args.out_dir, ks=args.ks, threshold=cfg.scorer.threshold,
                     sample_size=cfg.sample_size, seed=cfg.seed, single_thresholds=thresholds,
                     events=events)
    print(json.dumps(summary))
    manifest.row_counts.update(users=len(snap))


# argument parsing ---------------------------------------------------------------

def _add_engine_flags(p, scorer: bool = False):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--duration", dest="context_duration_s", type=int, help="context duration in seconds")
    p.add_argument("--vote-threshold", dest="vote_share_threshold", type=float)
    p.add_argument("--min-messages", type=int)
    p.add_argument("--seed", type=int)
    if scorer:
        p.add_argument("--method", choices=("dknn", "sknn", "kmeans"))
        p.add_argument("--k", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--sample-size", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trolldetect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--manifest", help="write a JSON run manifest here")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse-stats", help="count lines, malformed lines, out-of-order timestamps")
    p.add_argument("log")
    p.set_defaults(func=cmd_parse_stats)

    p = sub.add_parser("contexts", help="one CSV row per context window")
    p.add_argument("log")
    p.add_argument("-o", "--output")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_contexts)

    p = sub.add_parser("features", help="per-user f1..f10 feature CSV")
    p.add_argument("log")
    p.add_argument("-o", "--output")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("score", help="anomaly scores and troll labels")
    p.add_argument("--input", required=True, help="features CSV")
    p.add_argument("--output", help="scores CSV (default stdout)")
    p.add_argument("--summary", help="JSON summary path")
    _add_engine_flags(p, scorer=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pca", help="Gram-matrix principal components")
    p.add_argument("--input", required=True, help="features CSV")
    p.add_argument("--output", help="projection CSV")
    p.add_argument("--components", choices=sorted(PRESETS), default="first3")
    p.add_argument("--center", action="store_true", help="mean-center columns first")
    p.add_argument("--singular-values", help="JSON path for singular values")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("online", help="streaming detection with periodic re-clustering")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--listen", metavar="HOST:PORT")
    src.add_argument("--replay", metavar="FILE")
    p.add_argument("--speed", type=float, default=0.0, help="replay speed multiplier (0 = unthrottled)")
    p.add_argument("--recluster-interval", dest="recluster_interval_s", type=int)
    p.add_argument("--output", help="NDJSON event output (default stdout)")
    _add_engine_flags(p, scorer=True)
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("synth", help="labelled synthetic chat log")
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--troll-fraction", type=float, default=0.01)
    p.add_argument("--duration", type=int, default=3600, help="seconds of chat")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="log output (default stdout)")
    p.add_argument("--truth", help="ground-truth CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="figure data bundle")
    p.add_argument("--input", required=True, help="features CSV")
    p.add_argument("--log", help="chat log for the spam moving average")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ks", type=int, nargs="+", default=list(DEFAULT_KS))
    p.add_argument("--single-thresholds", type=float, nargs="+")
    _add_engine_flags(p, scorer=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    manifest = RunManifest(args.command, {}, getattr(args, "seed", None))
    try:
        if not manifest.config and args.command not in ("synth", "parse-stats", "pca"):
            cfg = _config(args)
            manifest.config = cfg.to_dict()
            manifest.seed = cfg.seed
        args.func(args, manifest)
        for attr in ("log", "input", "replay"):
            path = getattr(args, attr, None)
            if path:
                manifest.hash_input(path)
    except UsageError as exc:
        print(f"trolldetect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"trolldetect: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, ValueError) as exc:
        print(f"trolldetect: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.manifest:
        manifest.write(args.manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
