"""Sort-free, threshold-pruned breadth-limited tree detector with soft output.

The search walks the triangular system from the last layer to the first.
Every surviving partial vector (parent) is extended by the constellation
points closest to its interference-cancelled observable, in the zigzag order
of :func:`~dare.constellation.neighbor_indices`; how many children a parent
may offer is set by where the observable falls inside its slicing cell.
Children are offered breadth first (first child of every parent, then second
children, ...) and accepted while their metric is below a threshold that
tracks the best metric of the previous layer.  No sorting is performed.

Bit reliabilities come from the final candidate list: the metric gap between
the best candidate and the best candidate disagreeing on a bit, clamped to
``llr_clamp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..complexity import ABS2, COMPLEX_MULT, REAL_BY_COMPLEX, ComplexityReport
from ..constellation import Constellation, neighbor_indices, region_jmax
from ..linalg import QrFactors, as_cvector, matched_observable
from .analysis import default_delta_d

# real multiplications per child metric: |e|^2 (2), * R_ll^2/sigma^2 (1),
# |s|^2 (2), * lam^2/sigma^2 (1)
METRIC_MULTS = ABS2 + 1 + ABS2 + 1


@dataclass(frozen=True)
class DareConfig:
    """Search parameters.

    ``delta_d=None`` selects :func:`default_delta_d` for the constellation in
    use; ``region_threshold=None`` selects ``d_qam / 4``.
    """

    n_c: int = 8
    delta_d: float | None = None
    llr_clamp: float = 8.0
    region_threshold: float | None = None

    def __post_init__(self):
        if self.n_c < 1:
            raise ValueError(f"n_c must be >= 1, got {self.n_c}")
        if self.delta_d is not None and not self.delta_d > 0:
            raise ValueError(f"delta_d must be > 0, got {self.delta_d}")
        if not self.llr_clamp > 0:
            raise ValueError(f"llr_clamp must be > 0, got {self.llr_clamp}")

    def resolve_delta_d(self, c: Constellation) -> float:
        return default_delta_d(c, self.n_c) if self.delta_d is None else self.delta_d


@dataclass
class CandidateList:
    """Final survivors of the search, one column per candidate vector."""

    indices: np.ndarray  # (K, active) constellation point indices
    symbols: np.ndarray  # (K, active) complex
    metrics: np.ndarray  # (active,)
    labels: np.ndarray  # (K * bits_per_symbol, active) bipolar

    @property
    def active(self) -> int:
        return self.metrics.shape[0]

    @property
    def best(self) -> int:
        return int(np.argmin(self.metrics))

    def contains(self, indices) -> bool:
        """Whether the vector of point indices is among the candidates."""
        col = np.asarray(indices).reshape(-1, 1)
        return bool(np.any(np.all(self.indices == col, axis=0)))


def dare_detect(
    qr: QrFactors,
    y,
    c: Constellation,
    sigma: float,
    cfg: DareConfig | None = None,
) -> tuple[np.ndarray, CandidateList, ComplexityReport]:
    """Detect one received vector and estimate bit reliabilities.

    Parameters
    ----------
    qr : QrFactors
        Regularized factorization of the channel for this ``sigma``.
    y : array_like, shape (m,)
        Received vector.
    c : Constellation
    sigma : float
        Noise standard deviation, must be > 0.
    cfg : DareConfig, optional

    Returns
    -------
    llr : ndarray, shape (K * bits_per_symbol,)
        Bit reliabilities, layer-major, positive favouring label +1.
    candidates : CandidateList
    report : ComplexityReport
    """
    cfg = cfg or DareConfig()
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    y = as_cvector(y, "y")
    if y.shape[0] != qr.m:
        raise ValueError(f"y has length {y.shape[0]}, expected {qr.m}")
    n_c = cfg.n_c
    delta_d = cfg.resolve_delta_d(c)
    threshold = cfg.region_threshold

    report = ComplexityReport()
    ytil = matched_observable(qr.q, y, report).tolist()

    k = qr.k
    # per-channel constants, computed with the factorization and not charged
    rdiag = qr.r.diagonal().real
    inv_r = (1.0 / rdiag).tolist()
    gain = (rdiag**2 / sigma**2).tolist()
    slack = [delta_d * g for g in gain]
    lam_s2 = qr.lam**2 / sigma**2
    rows = qr.r.tolist()
    pts = c.point_list

    def child_metric(yh: complex, p: int, g: float) -> float:
        e = yh - pts[p]
        s = pts[p]
        return (e.real * e.real + e.imag * e.imag) * g - lam_s2 * (s.real * s.real + s.imag * s.imag)

    cand = [[-1] * k]
    syms = [[0j] * k]
    d = [0.0]
    for l in range(k - 1, -1, -1):
        row = rows[l]
        g_l = gain[l]
        n_par = len(cand)
        interference = n_par * (COMPLEX_MULT * (k - 1 - l) + REAL_BY_COMPLEX)
        metric_evals = n_par

        yh = []
        orders = []
        jmax = []
        m_buf = []
        for n in range(n_par):
            acc = ytil[l]
            sv = syms[n]
            for kk in range(l + 1, k):
                acc -= row[kk] * sv[kk]
            yhn = acc * inv_r[l]
            p1 = c.slice_index(yhn)
            order = neighbor_indices(c, yhn, p1)
            yh.append(yhn)
            orders.append(order)
            jmax.append(region_jmax(c, yhn, p1, len(order), n_c, threshold))
            m_buf.append(child_metric(yhn, p1, g_l) + d[n])

        # threshold from the previous layer's metrics, fixed for the sweep
        m_tp = min(d) + slack[l]
        pending = [0] * n_par
        exhausted = [False] * n_par
        new_cand, new_syms, new_d = [], [], []
        accepted = 0
        for _ in range(max(jmax)):
            if accepted >= n_c:
                break
            for n in range(n_par):
                if accepted >= n_c:
                    break
                if exhausted[n] or not m_buf[n] < m_tp:
                    continue
                p = orders[n][pending[n]]
                cv = cand[n].copy()
                cv[l] = p
                sv = syms[n].copy()
                sv[l] = pts[p]
                new_cand.append(cv)
                new_syms.append(sv)
                new_d.append(m_buf[n])
                accepted += 1
                if pending[n] + 1 < jmax[n]:
                    pending[n] += 1
                    m_buf[n] = child_metric(yh[n], orders[n][pending[n]], g_l) + d[n]
                    metric_evals += 1
                else:
                    exhausted[n] = True

        if accepted:
            cand, syms, d = new_cand, new_syms, new_d
        else:
            # nothing passed: keep every parent, extended by its first child
            for n in range(n_par):
                p = orders[n][0]
                cand[n][l] = p
                syms[n][l] = pts[p]
            d = m_buf
        report.charge("interference", interference)
        report.charge("layer_metrics", METRIC_MULTS * metric_evals)

    idx = np.array(cand, dtype=np.int64).T
    metrics = np.array(d)
    labels = c.labels[idx.T].reshape(idx.shape[1], -1).T
    candidates = CandidateList(
        indices=idx,
        symbols=c.points[idx],
        metrics=metrics,
        labels=labels,
    )
    return reliability_from_candidates(candidates, cfg.llr_clamp), candidates, report


def reliability_from_candidates(candidates: CandidateList, llr_clamp: float) -> np.ndarray:
    """Clamped metric-gap reliabilities signed by the best candidate's bits.

    Bits on which no candidate disagrees with the best one get the full
    ``llr_clamp`` magnitude.
    """
    d = candidates.metrics
    x = candidates.labels
    best = int(np.argmin(d))
    x1 = x[:, best]
    rival = np.where(x != x1[:, None], d[None, :], np.inf).min(axis=1)
    magnitude = np.minimum(rival - d[best], llr_clamp)
    return x1 * magnitude
