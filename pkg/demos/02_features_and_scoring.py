"""
User features and the three distance scorers
=============================================

"""

import numpy as np

from trolldetect import EngineConfig, ScorerConfig, run_batch, score_matrix
from trolldetect.profiles import FEATURE_NAMES
from trolldetect.synth import Scenario, generate_stream

stream = generate_stream(Scenario(n_users=400, troll_fraction=0.02, duration_s=3600, seed=4))
result = run_batch(stream.events, EngineConfig(scorer=ScorerConfig("kmeans")))
snap = result.snapshot
print(len(snap), "eligible users out of", len(result.profiles))

# Ten features per user, each a fraction in [0, 1]
trolls = np.array([stream.truth[u] == "troll" for u in snap.usernames])
print("feature    normal   troll")
for j, name in enumerate(FEATURE_NAMES):
    print(f"{name:8s} {snap.matrix[~trolls, j].mean():8.3f} {snap.matrix[trolls, j].mean():7.3f}")

# Same matrix, three scorers. Scores are min-max scaled to 0..100; above 40 means troll
for cfg in (ScorerConfig("dknn", 5), ScorerConfig("sknn", 5), ScorerConfig("kmeans")):
    res = score_matrix(snap.matrix, cfg, snap.usernames)
    caught = np.sum(res.is_troll & trolls)
    print(f"{cfg.method:6s} labelled {res.troll_percent:5.2f}%  caught {caught}/{trolls.sum()}")

# Scores of the true trolls under kmeans
print(np.round(result.scores.scores[trolls], 1))
