"""Complex linear algebra used by the detectors.

The only non-trivial routine is the Householder factorization of the
Tikhonov-stacked channel ``[H; lam*I]``, which turns regularized detection
into a search over an upper-triangular system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexity import COMPLEX_MULT, ComplexityReport


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_cvector(a, name: str = "vector") -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class QrFactors:
    """Output of :func:`regularized_qr`.

    Attributes
    ----------
    q : ndarray, shape (m, k)
        Top ``m`` rows of the orthonormal factor of ``[H; lam*I]``.
    r : ndarray, shape (k, k)
        Upper triangular factor with real positive diagonal.
    lam : float
        Regularization weight ``sigma / symbol_energy``.
    """

    q: np.ndarray
    r: np.ndarray
    lam: float

    @property
    def k(self) -> int:
        return self.r.shape[0]

    @property
    def m(self) -> int:
        return self.q.shape[0]


def householder_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin Householder QR of a tall complex matrix.

    Returns ``(q, r)`` with ``q`` of shape (n, k) having orthonormal columns
    and ``r`` upper triangular with a real non-negative diagonal.
    """
    a = np.array(a, dtype=np.complex128)
    n, k = a.shape
    if n < k:
        raise ValueError(f"need at least as many rows as columns, got {a.shape}")
    reflectors = []
    for j in range(k):
        x = a[j:, j]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            reflectors.append(None)
            continue
        # reflect x onto -phase(x0)*|x|*e1 to avoid cancellation
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * norm
        v /= np.linalg.norm(v)
        a[j:, j:] -= 2.0 * np.outer(v, v.conj() @ a[j:, j:])
        reflectors.append(v)

    q = np.eye(n, k, dtype=np.complex128)
    for j in reversed(range(k)):
        v = reflectors[j]
        if v is not None:
            q[j:, :] -= 2.0 * np.outer(v, v.conj() @ q[j:, :])

    r = np.triu(a[:k, :])
    # rotate each row of r (and column of q) so the diagonal is real positive
    diag = np.diag(r)
    mag = np.abs(diag)
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    r = r * phase.conj()[:, None]
    q = q * phase[None, :]
    r[np.diag_indices(k)] = mag
    return q, r


def regularized_qr(h, sigma: float, symbol_energy: float = 1.0) -> QrFactors:
    """Factor ``[H; lam*I] = [Q; Q2] R`` with ``lam = sigma / symbol_energy``.

    Parameters
    ----------
    h : array_like, shape (m, k)
        Channel matrix, ``m >= k``.
    sigma : float
        Noise standard deviation (``sigma >= 0``).
    symbol_energy : float
        Average symbol energy of the active constellation.

    Returns
    -------
    QrFactors
        ``Q2`` is discarded; only the top ``m`` rows of the orthonormal factor
        are kept.
    """
    h = as_cmatrix(h, "h")
    m, k = h.shape
    if m < k:
        raise ValueError(f"need m >= k, got m={m}, k={k}")
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError(f"sigma must be finite and >= 0, got {sigma}")
    if not symbol_energy > 0:
        raise ValueError(f"symbol_energy must be > 0, got {symbol_energy}")
    lam = float(sigma) / float(symbol_energy)
    stacked = np.vstack([h, lam * np.eye(k)])
    q_bar, r = householder_qr(stacked)
    if np.any(np.diag(r).real <= 0):
        raise np.linalg.LinAlgError("channel is rank deficient and unregularized")
    return QrFactors(q=q_bar[:m], r=r, lam=lam)


def matched_observable(q, y, report: ComplexityReport | None = None) -> np.ndarray:
    """Rotate a received vector into the triangular domain, ``Q^H y``.

    Charges ``4*m*k`` real multiplications to ``report`` when given.
    """
    q = np.asarray(q)
    y = as_cvector(y, "y")
    if q.ndim != 2 or q.shape[0] != y.shape[0]:
        raise ValueError(f"q shape {q.shape} incompatible with y length {y.shape[0]}")
    if report is not None:
        report.charge("matched_filter", COMPLEX_MULT * q.shape[0] * q.shape[1])
    return q.conj().T @ y
