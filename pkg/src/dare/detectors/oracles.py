"""Exhaustive reference detectors for small systems."""

from __future__ import annotations

import numpy as np

from ..constellation import Constellation
from ..linalg import as_cmatrix, as_cvector

MAX_ENUMERATION = 2**20


class EnumerationTooLarge(ValueError):
    """Raised when |O|^K exceeds the exhaustive-search guard."""


def _check(h, y, c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    h = as_cmatrix(h, "h")
    y = as_cvector(y, "y")
    if h.shape[0] != y.shape[0]:
        raise ValueError(f"h has {h.shape[0]} rows but y has length {y.shape[0]}")
    size = c.order ** h.shape[1]
    if size > MAX_ENUMERATION:
        raise EnumerationTooLarge(
            f"{c.order}^{h.shape[1]} = {size} symbol vectors exceeds {MAX_ENUMERATION}"
        )
    return h, y


def squared_distance_grid(h, y, c: Constellation) -> np.ndarray:
    """``||y - H s||^2`` for every symbol vector.

    Returns an array of shape ``(|O|,) * K``; axis ``k`` indexes the point of
    user ``k``, so C-order flattening enumerates with the last user fastest.
    """
    h, y = _check(h, y, c)
    m, k = h.shape
    res = np.broadcast_to(y.reshape((m,) + (1,) * k), (m,) + (c.order,) * k).copy()
    for user in range(k):
        shape = [m] + [1] * k
        shape[user + 1] = c.order
        res -= (h[:, user : user + 1] * c.points[None, :]).reshape(shape)
    return np.sum(res.real**2 + res.imag**2, axis=0)


def ml_detect(h, y, c: Constellation) -> np.ndarray:
    """Hard maximum-likelihood symbol vector by exhaustive search.

    Ties resolve to the first vector in enumeration order (last user
    fastest, points in :class:`Constellation` index order).
    """
    grid = squared_distance_grid(h, y, c)
    flat = int(np.argmin(grid))
    idx = np.unravel_index(flat, grid.shape)
    return c.points[np.array(idx)]


def maxlog_llr_exact(h, y, c: Constellation, sigma: float) -> np.ndarray:
    """Unclamped max-log LLRs by exhaustive enumeration.

    ``L(b) = (min_{s: b=-1} ||y-Hs||^2 - min_{s: b=+1} ||y-Hs||^2) / sigma^2``,
    layer-major ordering as in the tree detector.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    grid = squared_distance_grid(h, y, c)
    k = grid.ndim
    out = np.empty((k, c.bits_per_symbol))
    for user in range(k):
        others = tuple(a for a in range(k) if a != user)
        per_symbol = grid.min(axis=others) if others else grid
        for t in range(c.bits_per_symbol):
            plus = c.labels[:, t] > 0
            out[user, t] = per_symbol[~plus].min() - per_symbol[plus].min()
    return out.ravel() / sigma**2
