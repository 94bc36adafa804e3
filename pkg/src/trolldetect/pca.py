"""Principal components through the small Gram matrix.

For a tall ``A`` (n x 10) the right singular vectors and singular values
come from eigendecomposing ``A.T @ A`` (10 x 10); the left singular vectors
are recovered as ``U = A V S^-1``. This never forms an n x n product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

EIG_RTOL = 1e-12
PRESETS = {"first3": (0, 1, 2), "last3": (7, 8, 9)}


@dataclass(frozen=True)
class PcaResult:
    V: np.ndarray
    S: np.ndarray
    U: np.ndarray
    degenerate: np.ndarray  # True where S is treated as zero and U's column is zero-filled
    mean: np.ndarray | None = None


def gram_matrix(A: np.ndarray, block_rows: int = 65536) -> np.ndarray:
    """``A.T @ A`` accumulated over row blocks, symmetrized."""
    A = np.asarray(A, dtype=float)
    d = A.shape[1]
    G = np.zeros((d, d))
    for start in range(0, A.shape[0], block_rows):
        blk = A[start:start + block_rows]
        G += blk.T @ blk
    return 0.5 * (G + G.T)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def gram_svd(A: np.ndarray, center: bool = False) -> PcaResult:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1:
        raise ValueError("need a non-empty 2-D matrix")
    mean = None
    if center:
        mean = A.mean(axis=0)
        A = A - mean
    evals, evecs = np.linalg.eigh(gram_matrix(A))
    order = np.argsort(evals)[::-1]
    evals, V = evals[order], _fix_signs(evecs[:, order])
    top = evals[0] if evals.size else 0.0
    degenerate = evals <= EIG_RTOL * top if top > 0 else np.ones(evals.size, dtype=bool)
    S = np.sqrt(np.where(degenerate, 0.0, evals))
    U = np.zeros((A.shape[0], S.size))
    live = ~degenerate
    U[:, live] = (A @ V[:, live]) / S[live]
    return PcaResult(V, S, U, degenerate, mean)


def project(A: np.ndarray, result: PcaResult, components: Sequence[int] | str) -> np.ndarray:
    """Coordinates of ``A``'s rows on the chosen right singular vectors."""
    if isinstance(components, str):
        components = PRESETS[components]
    A = np.asarray(A, dtype=float)
    if result.mean is not None:
        A = A - result.mean
    return A @ result.V[:, list(components)]
