"""Rolling-quintile gas price categorization.

A transaction's price category is defined relative to the prices paid in the
blocks that precede it: pool every gas price in the lookback window, split the
pooled distribution into quintiles, and label the five bands very cheap
through very expensive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .chainmodel import ChainView, window_before
from .errors import EmptyInput, InsufficientWindow

DEFAULT_LOOKBACK = 120
MIN_POOL_SIZE = 5  # one price per quintile, below that the split is meaningless


class PriceCategory(enum.IntEnum):
    """Ordered price bands; comparison follows cost."""

    VERY_CHEAP = 0
    CHEAP = 1
    REGULAR = 2
    EXPENSIVE = 3
    VERY_EXPENSIVE = 4

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "PriceCategory":
        return _BY_LABEL[label.strip().lower()]


_LABELS = {
    PriceCategory.VERY_CHEAP: "very_cheap",
    PriceCategory.CHEAP: "cheap",
    PriceCategory.REGULAR: "regular",
    PriceCategory.EXPENSIVE: "expensive",
    PriceCategory.VERY_EXPENSIVE: "very_expensive",
}
_BY_LABEL = {v: k for k, v in _LABELS.items()}


@dataclass(frozen=True, slots=True)
class CategoryBoundaries:
    """Quintile cut points (GWEI) for one reference block's lookback window."""

    q1: float
    q2: float
    q3: float
    q4: float
    reference_block: int
    lookback: int
    sample_size: int

    def __post_init__(self):
        if not (self.q1 <= self.q2 <= self.q3 <= self.q4):
            raise ValueError("quantile cut points must be non-decreasing")
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q1, self.q2, self.q3, self.q4)


def quantile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile of an ascending-sorted sample.

    h = (n-1)*q; result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
    The caller guarantees ``values`` is sorted ascending.
    """
    n = len(values)
    if n == 0:
        raise EmptyInput("quantile of empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    h = (n - 1) * q
    lo = math.floor(h)
    if lo >= n - 1:
        return float(values[n - 1])
    frac = h - lo
    return float(values[lo]) + frac * (float(values[lo + 1]) - float(values[lo]))


def boundaries(chain: ChainView, block_number: int, lookback: int = DEFAULT_LOOKBACK) -> CategoryBoundaries:
    """Quintile boundaries from all prices pooled over the preceding window.

    Duplicate prices are pooled with their multiplicity (every transaction
    counts once). Raises InsufficientWindow when fewer than five prices pool.
    """
    window = window_before(chain, block_number, lookback)
    pool = sorted(tx.gas_price_gwei for b in window for tx in b.transactions)
    if len(pool) < MIN_POOL_SIZE:
        raise InsufficientWindow(
            f"only {len(pool)} prices in window before block {block_number}; need {MIN_POOL_SIZE}"
        )
    q1, q2, q3, q4 = (quantile(pool, q) for q in (0.2, 0.4, 0.6, 0.8))
    return CategoryBoundaries(
        q1=q1, q2=q2, q3=q3, q4=q4,
        reference_block=block_number, lookback=lookback, sample_size=len(pool),
    )


def categorize(price: float, b: CategoryBoundaries) -> PriceCategory:
    """Band a price against quintile boundaries; the bottom band absorbs <= q1."""
    if price < 0:
        raise ValueError(f"price must be >= 0, got {price}")
    if price <= b.q1:
        return PriceCategory.VERY_CHEAP
    if price <= b.q2:
        return PriceCategory.CHEAP
    if price <= b.q3:
        return PriceCategory.REGULAR
    if price <= b.q4:
        return PriceCategory.EXPENSIVE
    return PriceCategory.VERY_EXPENSIVE
