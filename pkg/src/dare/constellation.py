"""Gray-labelled square QAM and the geometric helpers used by the tree search.

Points are indexed ``p = i_re * L + i_im`` where ``L`` is the number of
levels per axis and ``i_re``, ``i_im`` index the ascending PAM levels.
Labels are bipolar: +1 stands for binary 0 on the channel-code side, and on
each axis the label of the most positive level has a +1 sign bit.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class Constellation:
    """Unit average energy square QAM.

    Attributes
    ----------
    order : int
        Number of points, one of 4, 16, 64.
    points : ndarray of complex, shape (order,)
    labels : ndarray of int8, shape (order, bits_per_symbol)
        Bipolar (+1/-1) Gray labels, real-axis bits first.
    d_qam : float
        Nearest-neighbour spacing.
    axis_levels : ndarray of float, shape (L,)
        Sorted PAM levels shared by both axes.
    """

    order: int
    points: np.ndarray
    labels: np.ndarray
    d_qam: float
    axis_levels: np.ndarray
    point_list: tuple[complex, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # plain Python scalars for the per-vector hot loops
        object.__setattr__(self, "point_list", tuple(complex(p) for p in self.points))

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @property
    def n_levels(self) -> int:
        return self.axis_levels.shape[0]

    @property
    def bits_per_axis(self) -> int:
        return self.bits_per_symbol // 2

    @property
    def axis_labels(self) -> np.ndarray:
        """Bipolar Gray labels of the axis levels, shape (L, bits_per_axis)."""
        return self.labels[:: self.n_levels, : self.bits_per_axis]

    @property
    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def index(self, i_re: int, i_im: int) -> int:
        return i_re * self.n_levels + i_im

    def axis_index(self, x: float) -> int:
        """Nearest level index on one axis, clipped to the outermost level.

        Ties round toward the level closer to zero; an input of exactly 0
        (only a tie for even ``L``) goes to the positive level.
        """
        n = self.n_levels
        u = x / self.d_qam + 0.5 * (n - 1)
        i = math.ceil(u - 0.5) if x > 0 else math.floor(u + 0.5)
        return 0 if i < 0 else (n - 1 if i >= n else i)

    def slice_index(self, y: complex) -> int:
        return self.axis_index(y.real) * self.n_levels + self.axis_index(y.imag)

    def point_index(self, s: complex, tol: float = 1e-9) -> int:
        """Index of constellation point ``s``; raises if ``s`` is not a point."""
        p = self.slice_index(complex(s))
        if abs(self.points[p] - s) > tol:
            raise ValueError(f"{s!r} is not a constellation point")
        return p

    def bits_to_indices(self, bits) -> np.ndarray:
        """Map bipolar label groups, shape (..., bits_per_symbol), to point indices."""
        bits = np.asarray(bits)
        binary = (bits > 0).astype(np.int64)
        # invert per-axis Gray code
        bpa = self.bits_per_axis
        idx = []
        for axis in range(2):
            g = binary[..., axis * bpa : (axis + 1) * bpa]
            b = g[..., 0].copy()
            value = b.copy()
            for t in range(1, bpa):
                b = b ^ g[..., t]
                value = (value << 1) | b
            idx.append(value)
        return idx[0] * self.n_levels + idx[1]


def _gray_axis_labels(n_levels: int) -> np.ndarray:
    bits = int(math.log2(n_levels))
    out = np.empty((n_levels, bits), dtype=np.int8)
    for i in range(n_levels):
        g = i ^ (i >> 1)
        for t in range(bits):
            out[i, t] = 1 if (g >> (bits - 1 - t)) & 1 else -1
    return out


@lru_cache(maxsize=None)
def build_qam(order: int) -> Constellation:
    """Build unit-energy square QAM with independent per-axis Gray labels."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {SUPPORTED_ORDERS}")
    n = int(round(math.sqrt(order)))
    # levels (2i - (n-1)) scaled so the average 2-D energy is 1
    scale = math.sqrt(2.0 * (order - 1) / 3.0)
    levels = (2.0 * np.arange(n) - (n - 1)) / scale
    axis_labels = _gray_axis_labels(n)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    points = (re + 1j * im).ravel()
    lab_re = np.repeat(axis_labels, n, axis=0)
    lab_im = np.tile(axis_labels, (n, 1))
    labels = np.hstack([lab_re, lab_im]).astype(np.int8)
    for arr in (levels, points, labels):
        arr.flags.writeable = False
    return Constellation(
        order=order,
        points=points,
        labels=labels,
        d_qam=2.0 / scale,
        axis_levels=levels,
    )


def slice_symbol(y: complex, c: Constellation) -> complex:
    """Nearest constellation point to ``y`` (per-axis rounding with edge clip)."""
    y = complex(y)
    if not (math.isfinite(y.real) and math.isfinite(y.imag)):
        raise ValueError("cannot slice a non-finite value")
    return complex(c.points[c.slice_index(y)])


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def neighbor_indices(c: Constellation, y: complex, p1: int) -> list[int]:
    """Up to four point indices in zigzag order around ``y``, starting at ``p1``.

    Stepped points are clipped to the grid, so near the edges some of them
    coincide and are dropped.
    """
    n = c.n_levels
    i_re, i_im = divmod(p1, n)
    s1 = c.point_list[p1]
    e_re = y.real - s1.real
    e_im = y.imag - s1.imag
    sr = _sign(e_re)
    si = _sign(e_im)
    j_re = min(max(i_re + sr, 0), n - 1)
    j_im = min(max(i_im + si, 0), n - 1)
    horizontal = j_re * n + i_im
    vertical = i_re * n + j_im
    diagonal = j_re * n + j_im
    if abs(e_re) > abs(e_im):
        seq = (p1, horizontal, vertical, diagonal)
    else:
        seq = (p1, vertical, horizontal, diagonal)
    out = []
    for p in seq:
        if p not in out:
            out.append(p)
    return out


@dataclass(frozen=True)
class NeighborOrdering:
    symbols: tuple[complex, ...]

    @property
    def count(self) -> int:
        return len(self.symbols)


def order_neighbors(y: complex, s1: complex, c: Constellation) -> NeighborOrdering:
    """Order the closest points around ``y`` given its sliced point ``s1``."""
    y = complex(y)
    p1 = c.point_index(s1)
    return NeighborOrdering(tuple(complex(c.points[p]) for p in neighbor_indices(c, y, p1)))


def region_jmax(
    c: Constellation,
    y: complex,
    p1: int,
    n_available: int,
    n_c: int,
    threshold: float | None = None,
) -> int:
    if threshold is None:
        threshold = 0.25 * c.d_qam
    s1 = c.point_list[p1]
    wide_re = abs(y.real - s1.real) > threshold
    wide_im = abs(y.imag - s1.imag) > threshold
    if wide_re and wide_im:
        j = 4
    elif wide_re or wide_im:
        j = 2
    else:
        j = 1
    return min(j, n_c, 4, n_available)


def jmax_region(
    y: complex,
    s1: complex,
    c: Constellation,
    n_c: int,
    threshold: float | None = None,
) -> int:
    """Number of children worth expanding given where ``y`` sits in its cell.

    1 in the central sub-square of the decision cell, 2 when one axis offset
    exceeds ``threshold`` (default ``d_qam / 4``), 4 when both do.  Capped at
    ``min(n_c, 4)`` and at the number of distinct neighbours available.
    """
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    y = complex(y)
    p1 = c.point_index(s1)
    available = len(neighbor_indices(c, y, p1))
    return region_jmax(c, y, p1, available, n_c, threshold)
