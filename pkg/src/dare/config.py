"""Plain-text experiment configuration.

One ``key = value`` pair per line, ``#`` or ``;`` starts a comment.  Keys:

=================  ========  ==================================================
key                required  meaning
=================  ========  ==================================================
m                  yes       receive antennas
k                  yes       single-antenna users (layers)
modulation         yes       4, 16 or 64 (``qpsk``, ``16qam``, ``64qam`` accepted)
snr                yes       dB grid: ``10, 12, 14`` or ``start:stop:step`` (inclusive)
detector           ber,      dare | lmmse | mmse_sic | ml | maxlog
                   throughput
code_rate          throughput  ``1/2`` or ``3/4``
n_c                no        tree breadth (default 8)
delta_d            no        pruning slack, ``auto`` = (n_c + 1)/8 * d_qam^2
llr_clamp          no        reliability ceiling (default 8)
region_threshold   no        cell sub-square half-width, ``auto`` = d_qam / 4
channel            no        rayleigh_flat (default) | rayleigh_multitap | identity
taps               no        multitap channel length (default 4 for multitap)
subcarriers        no        vectors per multitap trial (default 64)
min_trials         no        default 100
min_errors         no        default 100
max_trials         no        hard cap, default 10000000
seed               no        default 0
batch              no        trials between stopping-rule checks (default 50)
workers            no        worker processes (default 1)
=================  ========  ==================================================
"""

from __future__ import annotations

import configparser
from fractions import Fraction
from pathlib import Path

import numpy as np

from .channel import ChannelModel
from .coding import CodeSpec
from .constellation import SUPPORTED_ORDERS
from .detectors import DareConfig
from .sim import SimConfig

KEYS = (
    "m", "k", "modulation", "snr", "detector", "code_rate", "n_c", "delta_d",
    "llr_clamp", "region_threshold", "channel", "taps", "subcarriers",
    "min_trials", "min_errors", "max_trials", "seed", "batch", "workers",
)

REQUIRED = {
    "ber": ("m", "k", "modulation", "snr", "detector"),
    "throughput": ("m", "k", "modulation", "snr", "detector", "code_rate"),
    "llr": ("m", "k", "modulation", "snr"),
    "complexity": ("m", "k", "modulation", "snr"),
    "bound": ("m", "k", "modulation", "snr"),
}

_MODULATION_NAMES = {"qpsk": 4, "4qam": 4, "16qam": 16, "64qam": 64}


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


def read_config_text(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text)


def parse_config_text(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string("[sim]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = dict(parser["sim"])
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    return values


def parse_snr_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            grid = tuple(round(start + i * step, 10) for i in range(n))
        else:
            grid = tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"field 'snr': cannot parse {text!r}") from exc
    if not grid:
        raise ConfigError("field 'snr': empty grid")
    return grid


def _get(values, key, cast, default=None):
    raw = values.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {key!r}: invalid value {raw!r}") from exc


def _auto_float(text: str):
    return None if text.lower() == "auto" else float(text)


def _modulation(text: str) -> int:
    order = _MODULATION_NAMES.get(text.lower())
    if order is None:
        order = int(text)
    if order not in SUPPORTED_ORDERS:
        raise ValueError(order)
    return order


def build_sim_config(values: dict[str, str], subcommand: str) -> SimConfig:
    """Validate raw key/value pairs for ``subcommand`` and build a :class:`SimConfig`."""
    for key in REQUIRED[subcommand]:
        if not values.get(key, "").strip():
            raise ConfigError(f"missing required field {key!r}")
    m = _get(values, "m", int)
    k = _get(values, "k", int)
    modulation = _get(values, "modulation", _modulation)
    kind = _get(values, "channel", str, "rayleigh_flat")
    taps = _get(values, "taps", int, 4 if kind == "rayleigh_multitap" else 1)
    subcarriers = _get(values, "subcarriers", int, 64)
    try:
        channel = ChannelModel(kind, m, k, taps=taps, n_subcarriers=subcarriers)
        dare = DareConfig(
            n_c=_get(values, "n_c", int, 8),
            delta_d=_get(values, "delta_d", _auto_float),
            llr_clamp=_get(values, "llr_clamp", float, 8.0),
            region_threshold=_get(values, "region_threshold", _auto_float),
        )
        code = None
        rate = _get(values, "code_rate", lambda s: None if s.lower() == "none" else Fraction(s))
        if rate is not None:
            vectors = subcarriers if kind == "rayleigh_multitap" else 1
            bits = vectors * int(np.log2(modulation))
            code = CodeSpec.fitting(bits, rate)
        return SimConfig(
            m=m,
            k=k,
            modulation=modulation,
            snr_grid_db=parse_snr_grid(values["snr"]),
            detector=_get(values, "detector", str, "dare"),
            dare=dare,
            channel=channel,
            min_trials=_get(values, "min_trials", int, 100),
            min_errors=_get(values, "min_errors", int, 100),
            max_trials=_get(values, "max_trials", int, 10_000_000),
            seed=_get(values, "seed", int, 0),
            code=code,
            batch=_get(values, "batch", int, 50),
            workers=_get(values, "workers", int, 1),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def describe(cfg: SimConfig) -> list[tuple[str, str]]:
    """Every configuration field as (key, value) strings, for output headers."""
    c = cfg.constellation
    dare = cfg.dare
    rows = [
        ("m", cfg.m),
        ("k", cfg.k),
        ("modulation", cfg.modulation),
        ("snr", ", ".join(repr(s) for s in cfg.snr_grid_db)),
        ("detector", cfg.detector),
        ("n_c", dare.n_c),
        ("delta_d", repr(dare.resolve_delta_d(c))),
        ("llr_clamp", repr(dare.llr_clamp)),
        ("region_threshold", repr(dare.region_threshold if dare.region_threshold is not None else 0.25 * c.d_qam)),
        ("channel", cfg.channel.kind),
        ("taps", cfg.channel.taps),
        ("subcarriers", cfg.channel.n_subcarriers),
        ("code_rate", cfg.code.rate if cfg.code else "none"),
        ("code_block_bits", cfg.code.block_bits if cfg.code else "none"),
        ("min_trials", cfg.min_trials),
        ("min_errors", cfg.min_errors),
        ("max_trials", cfg.max_trials),
        ("seed", cfg.seed),
        ("batch", cfg.batch),
    ]
    return [(key, str(val)) for key, val in rows]
