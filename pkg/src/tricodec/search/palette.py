"""Color clustering and nearest-entry assignment, all in YCoCg."""
from __future__ import annotations

import numpy as np

from ..model import dequantize_ycocg, quantize_ycocg


def agglomerate(colors, k: int, weights=None) -> np.ndarray:
    """Merge colors down to at most ``k`` clusters.

    Repeatedly joins the two closest clusters (Euclidean in YCoCg) into their
    weighted mean.  Ties go to the lowest index pair, so the result is
    deterministic.  Returns cluster centres, shape (<=k, 3).
    """
    pts = np.array(colors, dtype=np.float64).reshape(-1, 3)
    w = np.ones(len(pts)) if weights is None else np.array(weights, dtype=np.float64)
    alive = np.ones(len(pts), dtype=bool)
    d = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d, np.inf)
    n = len(pts)
    while n > k:
        i, j = divmod(int(np.argmin(d)), len(pts))
        i, j = min(i, j), max(i, j)
        pts[i] = (w[i] * pts[i] + w[j] * pts[j]) / (w[i] + w[j])
        w[i] += w[j]
        alive[j] = False
        d[j, :] = np.inf
        d[:, j] = np.inf
        row = ((pts - pts[i]) ** 2).sum(-1)
        row[~alive] = np.inf
        row[i] = np.inf
        d[i, :] = row
        d[:, i] = row
        n -= 1
    return pts[alive]


def nearest(colors, palette_ycc) -> np.ndarray:
    """Index of the closest palette color for each color (ties: lowest index)."""
    c = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    p = np.asarray(palette_ycc, dtype=np.float64).reshape(-1, 3)
    d = ((c[:, None, :] - p[None, :, :]) ** 2).sum(-1)
    return np.argmin(d, axis=1)


def quantized_palette(centres) -> np.ndarray:
    """6-bit entries for cluster centres, duplicates removed in first-seen order."""
    q = quantize_ycocg(centres)
    _, first = np.unique(q, axis=0, return_index=True)
    return q[np.sort(first)]


def cluster_palette(colors, k: int) -> np.ndarray:
    return quantized_palette(agglomerate(colors, k))


def palette_ycc(entries) -> np.ndarray:
    return dequantize_ycocg(np.asarray(entries, dtype=np.int64).reshape(-1, 3))
