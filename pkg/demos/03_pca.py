"""
Principal components through the Gram matrix
============================================

"""

import numpy as np

from trolldetect import gram_svd, project, run_batch
from trolldetect.synth import Scenario, generate_stream

snap = run_batch(generate_stream(Scenario(n_users=300, duration_s=1800, seed=2)).events).snapshot
A = snap.matrix

# Only the 10x10 matrix A^T A is decomposed, so any number of users fits in memory
res = gram_svd(A)
print("singular values:", np.round(res.S, 3))
print("degenerate:", res.degenerate)

# The dense SVD agrees
print("max rel. difference:", np.max(np.abs(res.S - np.linalg.svd(A, compute_uv=False)) / res.S))

# Coordinates for 3-D scatter plots: leading and trailing components
first = project(A, res, "first3")
last = project(A, res, "last3")
print(first[:3])
print(last[:3])

# Mean-centered variant
centered = gram_svd(A, center=True)
print("centered singular values:", np.round(centered.S, 3))
