"""Small Monte Carlo statistics helpers (batch means, categorical rows)."""

from __future__ import annotations

import numpy as np

N_BATCHES = 32


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES):
    """(mean, stderr) by the method of batch means over fixed-order batches."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < n_batches:
        m = float(values.mean())
        se = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        return m, se
    usable = (n // n_batches) * n_batches
    chunks = values[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(values.mean()), float(chunks.std(ddof=1) / np.sqrt(n_batches))


def batch_ratio(numer: np.ndarray, denom: np.ndarray, n_batches: int = N_BATCHES):
    """(ratio, stderr) for mean(numer)/mean(denom) via per-batch ratios."""
    numer = np.asarray(numer, dtype=float)
    denom = np.asarray(denom, dtype=float)
    n = numer.size
    ratio = float(numer.mean() / denom.mean())
    if n < n_batches:
        return ratio, float("inf")
    usable = (n // n_batches) * n_batches
    rn = numer[:usable].reshape(n_batches, -1).mean(axis=1)
    rd = denom[:usable].reshape(n_batches, -1).mean(axis=1)
    ratios = rn / rd
    return ratio, float(ratios.std(ddof=1) / np.sqrt(n_batches))


def choice_rows(cum_rows: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Categorical draw per sample from row ``rows[k]`` of a cumulative matrix."""
    return (u[:, None] > cum_rows[rows]).sum(axis=1)
