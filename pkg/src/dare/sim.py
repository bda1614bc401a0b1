"""Monte-Carlo link-level experiments.

Every trial ``t`` draws all of its randomness (channel, bits, unit noise)
from ``numpy.random.default_rng([seed, t])``.  The same draws are reused at
every SNR point and for every detector, so curves are paired.  Trials run in
fixed-size batches and the stopping rule is only checked between batches,
which keeps results identical whether batches run serially or in a process
pool.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelModel, complex_normal, draw_channel, noise_sigma
from .coding import CodeSpec, encode, viterbi
from .constellation import Constellation, build_qam
from .detectors import (
    DareConfig,
    dare_detect,
    exclusion_probability_bound,
    lmmse_apply,
    lmmse_filter,
    max_complexity_bound,
    maxlog_llr_exact,
    ml_detect,
    mmse_sic_apply,
    mmse_sic_filter,
)
from .linalg import regularized_qr

log = logging.getLogger(__name__)

DETECTORS = ("dare", "lmmse", "mmse_sic", "ml", "maxlog")


@dataclass(frozen=True)
class SimConfig:
    m: int
    k: int
    modulation: int
    snr_grid_db: tuple[float, ...]
    detector: str = "dare"
    dare: DareConfig = field(default_factory=DareConfig)
    channel: ChannelModel | None = None
    min_trials: int = 100
    min_errors: int = 100
    max_trials: int = 10_000_000
    seed: int = 0
    code: CodeSpec | None = None
    batch: int = 50
    workers: int = 1

    def __post_init__(self):
        if self.m < self.k:
            raise ValueError(f"need m >= k, got m={self.m}, k={self.k}")
        if self.min_trials < 1:
            raise ValueError("min_trials must be >= 1")
        if self.max_trials < self.min_trials:
            raise ValueError("max_trials must be >= min_trials")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not self.snr_grid_db:
            raise ValueError("snr grid must not be empty")
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}; expected one of {DETECTORS}")
        if self.channel is None:
            object.__setattr__(self, "channel", ChannelModel("rayleigh_flat", self.m, self.k))
        elif (self.channel.m, self.channel.k) != (self.m, self.k):
            raise ValueError("channel dimensions disagree with m, k")

    @property
    def constellation(self) -> Constellation:
        return build_qam(self.modulation)

    @property
    def vectors_per_trial(self) -> int:
        ch = self.channel
        return ch.n_subcarriers if ch.kind == "rayleigh_multitap" else 1


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    metric: str
    value: float
    trials: int
    errors: int
    stderr: float
    capped: bool = False


def binomial_stderr(errors: int, n: int) -> float:
    if n == 0:
        return float("nan")
    p = errors / n
    return float(np.sqrt(p * (1.0 - p) / n))


# -- per-trial primitives ----------------------------------------------------


def _trial_draws(cfg: SimConfig, t: int):
    """Channels, transmitted point indices and unit noise for trial ``t``."""
    rng = np.random.default_rng([cfg.seed, t])
    h = draw_channel(cfg.channel, rng)
    hs = h if h.ndim == 3 else h[None]
    n_vec = hs.shape[0]
    c = cfg.constellation
    idx = rng.integers(0, c.order, size=(n_vec, cfg.k))
    noise = complex_normal(rng, (n_vec, cfg.m))
    return rng, hs, idx, noise


def run_detector(name: str, h, y, sigma: float, c: Constellation, dare: DareConfig):
    """Run one detector on one received vector.

    Returns ``(llr, report, candidates)``; ``report`` and ``candidates`` are
    ``None`` where the detector does not produce them.  Hard-output
    detectors return their labels scaled by ``dare.llr_clamp``.
    """
    if name == "dare":
        qr = regularized_qr(h, sigma, c.mean_energy)
        llr, cands, report = dare_detect(qr, y, c, sigma, dare)
        return llr, report, cands
    if name == "lmmse":
        llr, report = lmmse_apply(lmmse_filter(h, sigma), y, c)
        return llr, report, None
    if name == "mmse_sic":
        llr, report = mmse_sic_apply(mmse_sic_filter(h, sigma), y, c)
        return llr, report, None
    if name == "ml":
        s = ml_detect(h, y, c)
        idx = [c.slice_index(complex(v)) for v in s]
        return c.labels[idx].ravel() * dare.llr_clamp, None, None
    if name == "maxlog":
        return maxlog_llr_exact(h, y, c, sigma), None, None
    raise ValueError(f"unknown detector {name!r}")


def _ber_batch(cfg: SimConfig, snr_db: float, t0: int, t1: int):
    c = cfg.constellation
    sigma = noise_sigma(snr_db, cfg.k)
    errors = 0
    for t in range(t0, t1):
        _, hs, idx, noise = _trial_draws(cfg, t)
        for h, ix, n in zip(hs, idx, noise):
            y = h @ c.points[ix] + sigma * n
            llr, _, _ = run_detector(cfg.detector, h, y, sigma, c, cfg.dare)
            errors += int(np.sum(np.where(llr >= 0, 1, -1) != c.labels[ix].ravel()))
    return Tally(errors)


def _interleave_index(n_sc: int, bps: int) -> np.ndarray:
    """Coded bit ``i`` of a user goes to subcarrier ``i % n_sc``, bit ``i // n_sc``.

    Returned as positions into the (n_sc, bps) symbol-major bit grid.
    """
    i = np.arange(n_sc * bps)
    return (i % n_sc) * bps + i // n_sc


def _throughput_batch(cfg: SimConfig, snr_db: float, t0: int, t1: int):
    c = cfg.constellation
    spec = cfg.code
    bps = c.bits_per_symbol
    sigma = noise_sigma(snr_db, cfg.k)
    perm = _interleave_index(cfg.vectors_per_trial, bps)
    block_errors = 0
    for t in range(t0, t1):
        rng, hs, _, noise = _trial_draws(cfg, t)
        info = rng.integers(0, 2, size=(cfg.k, spec.block_bits))
        coded = np.stack([encode(b, spec) for b in info])  # (K, coded)
        grid = np.empty_like(coded)
        grid[:, perm] = coded
        bits = (1 - 2 * grid.astype(np.int64)).reshape(cfg.k, -1, bps)  # (K, n_vec, bps)
        idx = c.bits_to_indices(bits).T  # (n_vec, K)
        llr_grid = np.empty((cfg.k, hs.shape[0], bps))
        for v, (h, ix, n) in enumerate(zip(hs, idx, noise)):
            y = h @ c.points[ix] + sigma * n
            llr, _, _ = run_detector(cfg.detector, h, y, sigma, c, cfg.dare)
            llr_grid[:, v, :] = llr.reshape(cfg.k, bps)
        llrs = llr_grid.reshape(cfg.k, -1)[:, perm]
        decoded = viterbi(llrs, spec)
        block_errors += int(np.sum(np.any(decoded != info, axis=1)))
    return Tally(block_errors)


def _llr_batch(cfg: SimConfig, snr_db: float, t0: int, t1: int):
    """Sign disagreements and clamped absolute errors against the exact max-log LLRs."""
    c = cfg.constellation
    sigma = noise_sigma(snr_db, cfg.k)
    clamp = cfg.dare.llr_clamp
    stats = np.zeros(6)  # dare: disagree, abs err, abs err^2; lmmse: same
    for t in range(t0, t1):
        _, hs, idx, noise = _trial_draws(cfg, t)
        for h, ix, n in zip(hs, idx, noise):
            y = h @ c.points[ix] + sigma * n
            exact = np.clip(maxlog_llr_exact(h, y, c, sigma), -clamp, clamp)
            for j, name in enumerate(("dare", "lmmse")):
                llr, _, _ = run_detector(name, h, y, sigma, c, cfg.dare)
                llr = np.clip(llr, -clamp, clamp)
                err = np.abs(llr - exact)
                stats[3 * j] += np.sum(np.sign(llr) != np.sign(exact))
                stats[3 * j + 1] += err.sum()
                stats[3 * j + 2] += (err**2).sum()
    return Tally(0, stats)


def _complexity_batch(cfg: SimConfig, snr_db: float, t0: int, t1: int):
    c = cfg.constellation
    sigma = noise_sigma(snr_db, cfg.k)
    # per detector (dare, lmmse, mmse_sic): sum and max
    sums = np.zeros(3)
    maxima = np.zeros(3)
    for t in range(t0, t1):
        _, hs, idx, noise = _trial_draws(cfg, t)
        for h, ix, n in zip(hs, idx, noise):
            y = h @ c.points[ix] + sigma * n
            for j, name in enumerate(("dare", "lmmse", "mmse_sic")):
                _, report, _ = run_detector(name, h, y, sigma, c, cfg.dare)
                sums[j] += report.real_mults
                maxima[j] = max(maxima[j], report.real_mults)
    return Tally(0, sums, maxima)


def _exclusion_batch(cfg: SimConfig, snr_db: float, t0: int, t1: int):
    c = cfg.constellation
    sigma = noise_sigma(snr_db, cfg.k)
    delta_d = cfg.dare.resolve_delta_d(c)
    excluded = 0
    stats = np.zeros(2)  # bound sum, bound^2 sum
    for t in range(t0, t1):
        _, hs, idx, noise = _trial_draws(cfg, t)
        for h, ix, n in zip(hs, idx, noise):
            y = h @ c.points[ix] + sigma * n
            qr = regularized_qr(h, sigma, c.mean_energy)
            bound = exclusion_probability_bound(qr.r, sigma, delta_d)
            _, cands, _ = dare_detect(qr, y, c, sigma, cfg.dare)
            excluded += not cands.contains(ix)
            stats += (bound, bound * bound)
    return Tally(excluded, stats)


# -- driver --------------------------------------------------------------------


@dataclass(frozen=True)
class Tally:
    """Result of one batch: an event count plus running sums and maxima."""

    errors: int
    sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    maxima: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def merge(self, other: Tally) -> Tally:
        return Tally(
            self.errors + other.errors,
            self.sums + other.sums,
            np.maximum(self.maxima, other.maxima),
        )


def _run_point(cfg: SimConfig, batch_fn, snr_db: float, use_errors: bool, pool=None):
    """Run batches until the stopping rule holds; returns (trials, tally, capped)."""
    total = None
    trials = 0
    capped = False

    def done() -> bool:
        if trials < cfg.min_trials:
            return False
        return not use_errors or (total is not None and total.errors >= cfg.min_errors)

    while not done():
        if trials >= cfg.max_trials:
            capped = True
            break
        n_parallel = cfg.workers if pool is not None else 1
        spans = []
        start = trials
        for _ in range(n_parallel):
            stop = min(start + cfg.batch, cfg.max_trials)
            if stop <= start:
                break
            spans.append((start, stop))
            start = stop
        if pool is not None:
            futures = [pool.submit(batch_fn, cfg, snr_db, a, b) for a, b in spans]
            results = [f.result() for f in futures]
        else:
            results = [batch_fn(cfg, snr_db, a, b) for a, b in spans]
        # merge in trial order, re-checking the stopping rule after each batch
        for (a, b), res in zip(spans, results):
            total = res if total is None else total.merge(res)
            trials = b
            if done():
                break
    log.debug("snr %.2f dB: %d trials, %d errors", snr_db, trials, total.errors)
    return trials, total, capped


def _sweep(cfg: SimConfig, batch_fn, use_errors: bool):
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return [(snr, _run_point(cfg, batch_fn, snr, use_errors, pool)) for snr in cfg.snr_grid_db]
    return [(snr, _run_point(cfg, batch_fn, snr, use_errors)) for snr in cfg.snr_grid_db]


def _check_enumeration(cfg: SimConfig, names) -> None:
    from .detectors import MAX_ENUMERATION, EnumerationTooLarge

    if any(n in ("ml", "maxlog") for n in names) and cfg.modulation**cfg.k > MAX_ENUMERATION:
        raise EnumerationTooLarge(
            f"{cfg.modulation}^{cfg.k} symbol vectors exceeds the enumeration guard"
        )


def run_ber(cfg: SimConfig) -> list[CurvePoint]:
    """Uncoded bit error rate of ``cfg.detector`` over the SNR grid."""
    if cfg.code is not None:
        raise ValueError("run_ber is uncoded; remove the code from the config")
    _check_enumeration(cfg, [cfg.detector])
    bits = cfg.vectors_per_trial * cfg.k * cfg.constellation.bits_per_symbol
    out = []
    for snr, (trials, tally, capped) in _sweep(cfg, _ber_batch, True):
        errors = tally.errors
        n = trials * bits
        out.append(CurvePoint(snr, "ber", errors / n, trials, errors, binomial_stderr(errors, n), capped))
    return out


def run_throughput(cfg: SimConfig) -> list[CurvePoint]:
    """Coded throughput as a fraction of the peak ``rate * log2|O|`` per stream.

    Each trial carries one codeword per user spread over all vectors of the
    trial (subcarriers for the multitap model).
    """
    if cfg.code is None:
        raise ValueError("run_throughput needs a code")
    _check_enumeration(cfg, [cfg.detector])
    coded = cfg.vectors_per_trial * cfg.constellation.bits_per_symbol
    if cfg.code.coded_length != coded:
        raise ValueError(
            f"codeword length {cfg.code.coded_length} does not fill {coded} bits per user"
        )
    peak = float(cfg.code.rate) * cfg.constellation.bits_per_symbol
    out = []
    for snr, (trials, tally, capped) in _sweep(cfg, _throughput_batch, True):
        errors = tally.errors
        blocks = trials * cfg.k
        fer = errors / blocks
        goodput = (1.0 - fer) * peak
        out.append(CurvePoint(snr, "throughput", goodput / peak, trials, errors, binomial_stderr(errors, blocks), capped))
    return out


def run_llr_fidelity(cfg: SimConfig) -> list[CurvePoint]:
    """Per-bit sign agreement and clamped MAE of DARE and LMMSE against exact max-log."""
    _check_enumeration(cfg, ["maxlog"])
    fixed = replace(cfg, min_errors=0)
    bits = cfg.vectors_per_trial * cfg.k * cfg.constellation.bits_per_symbol
    out = []
    for snr, (trials, tally, capped) in _sweep(fixed, _llr_batch, False):
        stats = tally.sums
        n = trials * bits
        for j, name in enumerate(("dare", "lmmse")):
            disagree = int(stats[3 * j])
            mae = stats[3 * j + 1] / n
            var = max(stats[3 * j + 2] / n - mae**2, 0.0)
            out.append(CurvePoint(snr, f"sign_agreement_{name}", 1.0 - disagree / n, trials, disagree,
                                  binomial_stderr(disagree, n), capped))
            out.append(CurvePoint(snr, f"mae_{name}", mae, trials, 0, float(np.sqrt(var / n)), capped))
    return out


def run_complexity(cfg: SimConfig) -> list[CurvePoint]:
    """Mean and max real multiplications per vector for DARE, LMMSE and MMSE-SIC.

    A DARE maximum above the closed-form bound is logged as an error and
    still reported, so the CSV shows the violation.
    """
    fixed = replace(cfg, min_errors=0)
    bound = max_complexity_bound(cfg.m, cfg.k, cfg.dare.n_c)
    linear = 4 * cfg.m * cfg.k
    out = []
    for snr, (trials, tally, capped) in _sweep(fixed, _complexity_batch, False):
        n = trials * cfg.vectors_per_trial
        sums, maxima = tally.sums, tally.maxima
        dare_mean, dare_max = sums[0] / n, int(maxima[0])
        if dare_max > bound:
            log.error("DARE used %d real multiplications, bound is %d", dare_max, bound)
        rows = [
            ("dare_mean_real_mults", dare_mean),
            ("dare_max_real_mults", dare_max),
            ("lmmse_mean_real_mults", sums[1] / n),
            ("mmse_sic_mean_real_mults", sums[2] / n),
            ("dare_bound_real_mults", bound),
            ("ratio_max_to_lmmse", dare_max / linear),
            ("ratio_mean_to_lmmse", dare_mean / linear),
        ]
        out.extend(CurvePoint(snr, name, float(v), trials, 0, 0.0, capped) for name, v in rows)
    return out


def run_exclusion(cfg: SimConfig) -> list[CurvePoint]:
    """Mean closed-form exclusion bound and the empirical exclusion rate of DARE."""
    fixed = replace(cfg, min_errors=0)
    out = []
    for snr, (trials, tally, capped) in _sweep(fixed, _exclusion_batch, False):
        excluded, stats = tally.errors, tally.sums
        n = trials * cfg.vectors_per_trial
        mean = stats[0] / n
        sd = np.sqrt(max(stats[1] / n - mean**2, 0.0) / n)
        out.append(CurvePoint(snr, "exclusion_bound", float(mean), trials, 0, float(sd), capped))
        out.append(CurvePoint(snr, "exclusion_rate", excluded / n, trials, excluded,
                              binomial_stderr(excluded, n), capped))
    return out


RUNNERS = {
    "ber": run_ber,
    "throughput": run_throughput,
    "llr": run_llr_fidelity,
    "complexity": run_complexity,
    "bound": run_exclusion,
}


def interpolate_crossing(points: list[CurvePoint], target: float, log_scale: bool = True) -> float:
    """SNR at which a monotone curve crosses ``target`` (linear interpolation,
    in log10 of the value when ``log_scale``).  Returns NaN if not bracketed."""
    pts = sorted(points, key=lambda p: p.snr_db)
    f = (lambda v: np.log10(v) if v > 0 else -np.inf) if log_scale else (lambda v: v)
    tgt = f(target)
    for a, b in zip(pts, pts[1:]):
        fa, fb = f(a.value), f(b.value)
        if (fa - tgt) * (fb - tgt) <= 0 and fa != fb:
            if not np.isfinite(fa) or not np.isfinite(fb):
                continue
            return float(a.snr_db + (tgt - fa) * (b.snr_db - a.snr_db) / (fb - fa))
    return float("nan")
