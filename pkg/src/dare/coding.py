"""Terminated K=7 (133, 171) convolutional code with soft max-log Viterbi.

Binary bits are {0, 1}.  LLRs are bipolar: a positive LLR favours binary 0.
Rate 3/4 is obtained by puncturing with the pattern 110/101 over each period
of three input bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

CONSTRAINT_LENGTH = 7
GENERATORS = (0o133, 0o171)
N_STATES = 1 << (CONSTRAINT_LENGTH - 1)
TAIL = CONSTRAINT_LENGTH - 1

# keep-mask over one puncturing period, interleaved as A1 B1 A2 B2 ...
PUNCTURE = {
    Fraction(1, 2): np.array([1, 1], dtype=bool),
    Fraction(3, 4): np.array([1, 1, 1, 0, 0, 1], dtype=bool),
}


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _trellis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predecessor table and branch outputs.

    The register is ``(bit << 6) | state`` with the newest bit in the MSB, and
    the next state is ``register >> 1``.  Each next state ``ns`` is reached by
    input bit ``ns >> 5`` from the two states ``((ns & 31) << 1) | x``.
    """
    pred = np.empty((N_STATES, 2), dtype=np.int64)
    out = np.empty((N_STATES, 2, 2), dtype=np.int8)  # (ns, x, generator), bipolar
    for ns in range(N_STATES):
        bit = ns >> (TAIL - 1)
        for x in range(2):
            s = ((ns & (N_STATES // 2 - 1)) << 1) | x
            reg = (bit << TAIL) | s
            pred[ns, x] = s
            for g, gen in enumerate(GENERATORS):
                out[ns, x, g] = 1 - 2 * _parity(reg & gen)
    return pred, out


_PRED, _OUT = _trellis()


@dataclass(frozen=True)
class CodeSpec:
    """Convolutional code configuration for one block of ``block_bits`` info bits."""

    block_bits: int
    rate: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "rate", Fraction(self.rate))
        if self.rate not in PUNCTURE:
            raise ValueError(f"unsupported rate {self.rate}; expected one of {sorted(PUNCTURE)}")
        if self.block_bits < 1:
            raise ValueError(f"block_bits must be >= 1, got {self.block_bits}")
        period = len(PUNCTURE[self.rate]) // 2
        if (self.block_bits + TAIL) % period:
            raise ValueError(
                f"block_bits + {TAIL} must be a multiple of {period} for rate {self.rate}"
            )

    @property
    def mother_length(self) -> int:
        return 2 * (self.block_bits + TAIL)

    @property
    def coded_length(self) -> int:
        mask = PUNCTURE[self.rate]
        return int(mask.sum()) * self.mother_length // len(mask)

    @classmethod
    def fitting(cls, coded_length: int, rate) -> CodeSpec:
        """Largest block whose punctured codeword has exactly ``coded_length`` bits."""
        rate = Fraction(rate)
        mask = PUNCTURE.get(rate)
        if mask is None:
            raise ValueError(f"unsupported rate {rate}")
        kept = int(mask.sum())
        if coded_length % kept:
            raise ValueError(f"coded length {coded_length} not a multiple of {kept} for rate {rate}")
        steps = coded_length // kept * (len(mask) // 2)
        return cls(block_bits=steps - TAIL, rate=rate)


def _keep_mask(spec: CodeSpec) -> np.ndarray:
    mask = PUNCTURE[spec.rate]
    return np.tile(mask, spec.mother_length // len(mask))


def encode(info_bits, spec: CodeSpec) -> np.ndarray:
    """Terminated, punctured encoding of one block of binary info bits."""
    info = np.asarray(info_bits, dtype=np.int64)
    if info.shape != (spec.block_bits,):
        raise ValueError(f"expected {spec.block_bits} info bits, got shape {info.shape}")
    if np.any((info != 0) & (info != 1)):
        raise ValueError("info bits must be 0/1")
    bits = np.concatenate([info, np.zeros(TAIL, dtype=np.int64)])
    mother = np.empty(2 * bits.size, dtype=np.int8)
    state = 0
    for t, b in enumerate(bits):
        reg = (int(b) << TAIL) | state
        mother[2 * t] = _parity(reg & GENERATORS[0])
        mother[2 * t + 1] = _parity(reg & GENERATORS[1])
        state = reg >> 1
    return mother[_keep_mask(spec)]


def viterbi(llrs, spec: CodeSpec) -> np.ndarray:
    """Max-log soft Viterbi decoding of one or more punctured codewords.

    Parameters
    ----------
    llrs : array_like, shape (coded_length,) or (batch, coded_length)

    Returns
    -------
    ndarray of uint8, shape (block_bits,) or (batch, block_bits)
    """
    llrs = np.asarray(llrs, dtype=float)
    single = llrs.ndim == 1
    llrs = np.atleast_2d(llrs)
    if llrs.shape[1] != spec.coded_length:
        raise ValueError(f"expected {spec.coded_length} LLRs per block, got {llrs.shape[1]}")
    batch = llrs.shape[0]
    mother = np.zeros((batch, spec.mother_length))
    mother[:, _keep_mask(spec)] = llrs  # punctured positions stay at 0
    steps = spec.mother_length // 2
    pairs = mother.reshape(batch, steps, 2)

    metric = np.full((batch, N_STATES), -np.inf)
    metric[:, 0] = 0.0
    choice = np.empty((steps, batch, N_STATES), dtype=np.uint8)
    out = _OUT.astype(float)
    for t in range(steps):
        # branch gains, shape (batch, ns, x)
        gain = 0.5 * (pairs[:, t, None, None, :] * out[None]).sum(axis=-1)
        cand = metric[:, _PRED] + gain
        pick = cand[:, :, 1] > cand[:, :, 0]
        choice[t] = pick
        metric = np.where(pick, cand[:, :, 1], cand[:, :, 0])

    state = np.zeros(batch, dtype=np.int64)  # terminated trellis ends in state 0
    decoded = np.empty((batch, steps), dtype=np.uint8)
    rows = np.arange(batch)
    for t in range(steps - 1, -1, -1):
        decoded[:, t] = state >> (TAIL - 1)
        state = _PRED[state, choice[t, rows, state]]
    info = decoded[:, : spec.block_bits]
    return info[0] if single else info


def decode_soft(llrs, spec: CodeSpec, reference=None):
    """Decode and optionally compare against known info bits.

    Returns ``(info_bits, block_error)``; ``block_error`` is ``None`` without a
    reference, otherwise a bool (or bool array for batched input).
    """
    info = viterbi(llrs, spec)
    if reference is None:
        return info, None
    errors = np.any(info != np.asarray(reference), axis=-1)
    return info, errors if errors.ndim else bool(errors)
