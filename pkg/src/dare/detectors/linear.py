"""Linear MMSE and ordered MMSE-SIC baselines with max-log soft output.

Both assume unit-energy symbols.  Filters depend only on the channel and the
noise level, so they are built once per channel realization; the
per-vector complexity charged here covers only their application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..complexity import COMPLEX_MULT, REAL_BY_COMPLEX, ComplexityReport
from ..constellation import Constellation
from ..linalg import as_cmatrix, as_cvector


class SingularChannelError(np.linalg.LinAlgError):
    """The regularized Gram matrix could not be inverted."""


def _mmse_matrix(h: np.ndarray, sigma: float) -> np.ndarray:
    k = h.shape[1]
    gram = h.conj().T @ h + sigma**2 * np.eye(k)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("regularized Gram matrix is not positive definite") from exc
    if np.linalg.cond(chol) ** 2 > 1e14:
        raise SingularChannelError("regularized Gram matrix is numerically singular")
    return np.linalg.solve(gram, h.conj().T)


def scalar_maxlog_llr(z, noise_var, c: Constellation) -> np.ndarray:
    """Per-bit max-log LLRs of ``z = s + w`` with ``w ~ CN(0, noise_var)``.

    ``z`` and ``noise_var`` have shape (K,); the result is layer-major with
    real-axis bits first, matching the constellation labels.
    """
    z = np.asarray(z, dtype=np.complex128)
    noise_var = np.asarray(noise_var, dtype=float)
    levels = c.axis_levels
    plus = c.axis_labels > 0  # (L, bits_per_axis)
    out = []
    for comp in (z.real, z.imag):
        dist = (comp[:, None] - levels[None, :]) ** 2  # (K, L)
        neg = np.where(~plus.T[None, :, :], dist[:, None, :], np.inf).min(axis=2)
        pos = np.where(plus.T[None, :, :], dist[:, None, :], np.inf).min(axis=2)
        out.append((neg - pos) / noise_var[:, None])
    return np.concatenate(out, axis=1).ravel()


@dataclass(frozen=True)
class LmmseFilter:
    w: np.ndarray  # (K, M), rows scaled so each stream is unbiased
    mu: np.ndarray  # (K,) diag(W H) of the unscaled filter

    @property
    def noise_var(self) -> np.ndarray:
        return (1.0 - self.mu) / self.mu


def lmmse_filter(h, sigma: float) -> LmmseFilter:
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    h = as_cmatrix(h, "h")
    w = _mmse_matrix(h, sigma)
    mu = np.einsum("km,mk->k", w, h).real
    return LmmseFilter(w=w / mu[:, None], mu=mu)


def lmmse_apply(filt: LmmseFilter, y, c: Constellation) -> tuple[np.ndarray, ComplexityReport]:
    y = as_cvector(y, "y")
    if y.shape[0] != filt.w.shape[1]:
        raise ValueError(f"y has length {y.shape[0]}, expected {filt.w.shape[1]}")
    report = ComplexityReport()
    # unbiasing is folded into the filter, so only W y is charged
    report.charge("matched_filter", COMPLEX_MULT * filt.w.size)
    z = filt.w @ y
    return scalar_maxlog_llr(z, filt.noise_var, c), report


def lmmse_detect(h, y, c: Constellation, sigma: float) -> tuple[np.ndarray, ComplexityReport]:
    """Linear MMSE equalization followed by per-stream max-log demapping."""
    return lmmse_apply(lmmse_filter(h, sigma), y, c)


@dataclass(frozen=True)
class SicFilter:
    h: np.ndarray
    order: tuple[int, ...]  # users in detection order
    rows: tuple[np.ndarray, ...]  # unscaled MMSE row for each stage
    mu: np.ndarray  # (K,) per stage


def mmse_sic_filter(h, sigma: float) -> SicFilter:
    """Stage filters for SINR-ordered MMSE successive cancellation."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    h = as_cmatrix(h, "h")
    remaining = list(range(h.shape[1]))
    order, rows, mus = [], [], []
    while remaining:
        hr = h[:, remaining]
        w = _mmse_matrix(hr, sigma)
        mu = np.einsum("km,mk->k", w, hr).real
        best = int(np.argmax(mu / (1.0 - mu)))
        order.append(remaining.pop(best))
        rows.append(w[best])
        mus.append(mu[best])
    return SicFilter(h=h, order=tuple(order), rows=tuple(rows), mu=np.array(mus))


def mmse_sic_apply(filt: SicFilter, y, c: Constellation) -> tuple[np.ndarray, ComplexityReport]:
    y = as_cvector(y, "y")
    m, k = filt.h.shape
    if y.shape[0] != m:
        raise ValueError(f"y has length {y.shape[0]}, expected {m}")
    report = ComplexityReport()
    llr = np.empty((k, c.bits_per_symbol))
    residual = y.copy()
    for stage, user in enumerate(filt.order):
        mu = filt.mu[stage]
        z = (filt.rows[stage] @ residual) / mu
        report.charge("matched_filter", COMPLEX_MULT * m + REAL_BY_COMPLEX)
        llr[user] = scalar_maxlog_llr(np.array([z]), np.array([(1.0 - mu) / mu]), c)
        if stage < k - 1:
            hard = c.points[c.slice_index(complex(z))]
            residual = residual - filt.h[:, user] * hard
            report.charge("interference", COMPLEX_MULT * m)
    return llr.ravel(), report


def mmse_sic_detect(h, y, c: Constellation, sigma: float) -> tuple[np.ndarray, ComplexityReport]:
    """Ordered MMSE-SIC: detect the highest-SINR stream, slice, cancel, repeat."""
    return mmse_sic_apply(mmse_sic_filter(h, sigma), y, c)
