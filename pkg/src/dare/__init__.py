"""Low-complexity soft detection for uplink MU-MIMO and a Monte-Carlo link simulator."""

from .complexity import ComplexityReport
from .constellation import Constellation, build_qam, jmax_region, order_neighbors, slice_symbol
from .linalg import QrFactors, matched_observable, regularized_qr

__version__ = "0.1.0"

__all__ = [
    "ComplexityReport",
    "Constellation",
    "QrFactors",
    "build_qam",
    "jmax_region",
    "matched_observable",
    "order_neighbors",
    "regularized_qr",
    "slice_symbol",
]
