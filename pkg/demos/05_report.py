"""
Figure data: histograms, troll percentages, single features
===========================================================

"""

import json
import tempfile
from pathlib import Path

from trolldetect import run_batch
from trolldetect.report import report
from trolldetect.synth import Scenario, generate_stream

stream = generate_stream(Scenario(n_users=600, duration_s=3600, seed=5))
snap = run_batch(stream.events).snapshot

out = Path(tempfile.mkdtemp())
summary = report(snap, out, ks=(1, 5, 50, 500), events=stream.events)
print(json.dumps(summary, indent=1))

# One CSV per figure
for name in summary["files"]:
    print(name, "->", (out / name).read_text().splitlines()[:3])

# Thresholding one feature (share of mode votes for anarchy) flags far more users
print((out / "single_feature_rates.csv").read_text())
