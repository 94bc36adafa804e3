"""
Online detection with injected probe accounts
=============================================

"""

import io

from trolldetect import EngineConfig, OnlineEngine, ScorerConfig, inject_probe_users
from trolldetect.online import JsonLinesSink
from trolldetect.synth import Scenario, generate_probe_stream, generate_stream, probe_accounts

scenario = Scenario(n_users=500, troll_fraction=0.01, duration_s=3600, seed=8)
live = generate_stream(scenario)

# Two accounts we control: one behaves like a troll, one like everyone else
probes = probe_accounts(1, 1)
probe_stream = generate_probe_stream(scenario, probes, live.mode_timeline)

# Re-cluster every 15 minutes of stream time; events go out as JSON lines
out = io.StringIO()
cfg = EngineConfig(recluster_interval_s=900, scorer=ScorerConfig("kmeans"))
engine = OnlineEngine(cfg, JsonLinesSink(out))
engine.run_events(inject_probe_users(probe_stream.events, live.events))

for epoch in engine.epochs:
    trolls = sum(1 for lab in epoch.labels.values() if lab == "troll")
    print(f"epoch {epoch.number} cut {epoch.cut_ms}: {len(epoch.labels)} users, {trolls} trolls, "
          f"{len(epoch.relabels)} relabels")

for user in probes:
    print(user.username, "expected", user.label, "got", engine.labels.get(user.username, "normal"))

print(out.getvalue().splitlines()[0][:120])
