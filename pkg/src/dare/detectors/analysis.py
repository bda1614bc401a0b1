"""Closed-form companions of the tree detector: pruning slack, worst-case
cost, and the probability that pruning drops the transmitted vector."""

from __future__ import annotations

import numpy as np

from ..constellation import Constellation


def default_delta_d(c: Constellation, n_c: int) -> float:
    """Pruning slack ``(n_c + 1) / 8 * d_qam**2``."""
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    return (n_c + 1) / 8.0 * c.d_qam**2


def max_complexity_bound(m: int, k: int, n_c: int) -> int:
    """Worst-case real multiplications per received vector.

    ``4mk`` for the matched observable, ``2k(k+2)n_c`` for interference
    cancellation and ``12 k n_c`` for child metrics.
    """
    for name, val in (("m", m), ("k", k), ("n_c", n_c)):
        if val < 1:
            raise ValueError(f"{name} must be a positive count, got {val}")
    return 4 * m * k + 2 * k * (k + 2) * n_c + 12 * k * n_c


def exclusion_probability_bound(r, sigma: float, delta_d: float) -> float:
    """Approximate probability that the transmitted vector leaves the search.

    ``1 - prod_l (1 - exp(-delta_d |R_ll|^2 / sigma^2))``, treating the
    per-layer noise after cancellation as circular Gaussian with variance
    ``sigma^2 / |R_ll|^2``.
    """
    r = np.asarray(r)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"r must be square, got shape {r.shape}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not delta_d > 0:
        raise ValueError(f"delta_d must be > 0, got {delta_d}")
    diag2 = np.abs(np.diag(r)) ** 2
    if np.any(diag2 == 0):
        raise ValueError("r has a zero diagonal entry")
    keep = -np.expm1(-delta_d * diag2 / sigma**2)
    return float(np.clip(1.0 - np.prod(keep), 0.0, 1.0))
