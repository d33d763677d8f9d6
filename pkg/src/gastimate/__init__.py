"""Gas-price based transaction processing time estimation toolkit.

Provides a replayable ledger model, a deterministic fee-market simulator,
rolling-quintile price categorization, a single-feature log-space linear
estimator, sliding-window bootstrap validation, nonparametric model ranking,
a retrospective fee-savings experiment, and an HTTP lookup/recommendation
service.
"""

__version__ = "0.1.0"

from .chainmodel import Block, ChainView, Transaction, processing_time_minutes, window_before
from .pricing import CategoryBoundaries, PriceCategory, boundaries, categorize

__all__ = [
    "Block",
    "CategoryBoundaries",
    "ChainView",
    "PriceCategory",
    "Transaction",
    "boundaries",
    "categorize",
    "processing_time_minutes",
    "window_before",
]
