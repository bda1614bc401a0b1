"""Random channels, noise and symbol mapping for Monte-Carlo trials.

SNR convention: per receive antenna, with unit-energy symbols and unit
average channel-entry power, so ``E||Hs||^2 / M = K`` and the complex noise
variance is ``sigma^2 = K / 10**(snr_db / 10)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation

SNR_CONVENTION = (
    "per-receive-antenna SNR, unit-energy symbols, unit-power channel entries: "
    "sigma^2 = K / 10^(snr_db/10)"
)

CHANNEL_KINDS = ("rayleigh_flat", "rayleigh_multitap", "identity")


@dataclass(frozen=True)
class ChannelModel:
    """Channel family and dimensions.

    ``identity`` is a deterministic ``[I_K; 0]`` channel kept for diagnostics
    and closed-form checks.  ``n_subcarriers`` only matters for the multitap
    model, whose draws are per-subcarrier frequency responses.
    """

    kind: str
    m: int
    k: int
    taps: int = 1
    n_subcarriers: int = 64

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}")
        if self.m < 1 or self.k < 1:
            raise ValueError(f"m and k must be positive, got m={self.m}, k={self.k}")
        if self.taps < 1:
            raise ValueError(f"taps must be >= 1, got {self.taps}")
        if self.kind != "rayleigh_multitap" and self.taps != 1:
            raise ValueError(f"{self.kind} channel must have taps == 1")
        if self.n_subcarriers < 1:
            raise ValueError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")


def noise_sigma(snr_db: float, k: int) -> float:
    """Noise standard deviation for ``snr_db`` under :data:`SNR_CONVENTION`."""
    return float(np.sqrt(k / 10.0 ** (snr_db / 10.0)))


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(model: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one channel realization.

    Returns shape (m, k) for flat and identity channels, and
    (n_subcarriers, m, k) for the multitap model: the DFT of ``taps``
    i.i.d. CN(0, 1/taps) impulse-response taps per antenna pair.
    """
    m, k = model.m, model.k
    if model.kind == "identity":
        return np.eye(m, k, dtype=np.complex128)
    if model.kind == "rayleigh_flat":
        return complex_normal(rng, (m, k))
    taps = complex_normal(rng, (model.taps, m, k), var=1.0 / model.taps)
    return np.fft.fft(taps, n=model.n_subcarriers, axis=0)


def transmit(bits, c: Constellation, k: int) -> np.ndarray:
    """Map ``k * bits_per_symbol`` bipolar bits to ``k`` constellation points."""
    bits = np.asarray(bits)
    if bits.shape != (k * c.bits_per_symbol,):
        raise ValueError(
            f"expected {k * c.bits_per_symbol} bits for k={k}, got shape {bits.shape}"
        )
    if not np.all(np.abs(bits) == 1):
        raise ValueError("bits must be bipolar (+1/-1)")
    return c.points[c.bits_to_indices(bits.reshape(k, c.bits_per_symbol))]


def add_awgn(x, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """``x + n`` with ``n`` circular complex Gaussian of per-entry variance ``sigma^2``."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x = np.asarray(x, dtype=np.complex128)
    if sigma == 0:
        return x.copy()
    return x + complex_normal(rng, x.shape, sigma**2)
