"""Real-multiplication bookkeeping for per-vector detector cost.

Counts are charged explicitly at each arithmetic site of a detector rather
than measured by timing, so results are exact and platform independent.
One complex multiplication costs 4 real multiplications; a complex number
scaled by a real one costs 2; a squared magnitude costs 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

COMPLEX_MULT = 4
REAL_BY_COMPLEX = 2
ABS2 = 2

PHASES = ("matched_filter", "interference", "layer_metrics", "misc")


@dataclass
class ComplexityReport:
    """Per-invocation real multiplication counters, split by phase."""

    by_phase: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PHASES, 0))

    def charge(self, phase: str, count: int) -> None:
        if phase not in self.by_phase:
            raise KeyError(f"unknown complexity phase {phase!r}")
        self.by_phase[phase] += count

    @property
    def real_mults(self) -> int:
        return sum(self.by_phase.values())

    def merged(self, other: ComplexityReport) -> ComplexityReport:
        out = ComplexityReport(dict(self.by_phase))
        for key, val in other.by_phase.items():
            out.by_phase[key] = out.by_phase.get(key, 0) + val
        return out
