"""
BL-9: Plug-in information estimates on finite alphabets.

Entropies are in bits. No bias correction is applied.
"""

from __future__ import annotations

import math

import numpy as np

from pkg.errors import DomainError


def _table(counts: np.ndarray | list) -> np.ndarray:
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise DomainError("joint counts must be a nonempty 2-D table")
    if np.any(c < 0.0) or not np.all(np.isfinite(c)):
        raise DomainError("joint counts must be finite and nonnegative")
    if c.sum() <= 0.0:
        raise DomainError("joint counts table is empty")
    return c


def entropy(probs: np.ndarray | list) -> float:
    p = np.asarray(probs, dtype=float).ravel()
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def mutual_information(counts: np.ndarray | list) -> float:
    """I(X;Y) of the empirical joint distribution of a contingency table."""
    c = _table(counts)
    p = c / c.sum()
    mi = entropy(p.sum(axis=1)) + entropy(p.sum(axis=0)) - entropy(p)
    # rounding can leave a tiny negative value for product tables
    return max(mi, 0.0)


def mutual_information_stderr(counts: np.ndarray | list) -> float:
    """Delta-method standard error: sd of pointwise information over sqrt(n)."""
    c = _table(counts)
    n = c.sum()
    p = c / n
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0.0
    pmi = np.zeros_like(p)
    pmi[mask] = np.log2(p[mask] / (px @ py)[mask])
    mean = float((p * pmi).sum())
    var = float((p * (pmi - mean) ** 2).sum())
    return math.sqrt(max(var, 0.0) / n)


def contingency(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Counts table of two aligned label arrays (labels need not be contiguous)."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DomainError("label arrays must be aligned")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    table = np.zeros((xi.max(initial=-1) + 1, yi.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (xi.ravel(), yi.ravel()), 1)
    return table
