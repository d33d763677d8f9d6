"""The single engineered feature and its transforms.

For a transaction priced at p, the feature is the average over a trailing
block window of the per-block percentage of transactions whose gas price is
strictly lower than p. High values mean the price is competitive and the
transaction should clear quickly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chainmodel import Block, ChainView, processing_time_minutes, window_before
from .errors import DomainError, EmptyWindow, InsufficientWindow
from .pricing import DEFAULT_LOOKBACK, PriceCategory, boundaries, categorize


class AnchorMode(enum.Enum):
    """How the trailing window is anchored.

    BY_CONTAINING_BLOCK uses the blocks before the transaction's containing
    block (training time, block known). BY_PENDING_TIME uses the most recent
    blocks at or before a timestamp (prediction time, only the head known).
    """

    BY_CONTAINING_BLOCK = "by_containing_block"
    BY_PENDING_TIME = "by_pending_time"


@dataclass(frozen=True, slots=True)
class FeatureSample:
    """One training/evaluation observation."""

    tx_hash: str
    feature_pct: float
    actual_minutes: float
    pending_ts: int
    price_category: PriceCategory


def transform(x: float) -> float:
    """log(x + 1); the skew-taming transform applied to feature and target."""
    if x < 0:
        raise DomainError(f"transform requires x >= 0, got {x}")
    return math.log1p(x)


def inverse_transform(y: float) -> float:
    """exp(y) - 1; inverse of transform on [0, inf)."""
    return math.expm1(y)


def _resolve_window(chain: ChainView, anchor: int, lookback: int, mode: AnchorMode) -> Sequence[Block]:
    if mode is AnchorMode.BY_CONTAINING_BLOCK:
        return window_before(chain, anchor, lookback)
    window = chain.blocks_at_or_before(anchor, lookback)
    if not window:
        raise EmptyWindow(f"no blocks at or before ts {anchor}")
    return window


def avg_pct_below(
    chain: ChainView,
    price: float,
    anchor: int,
    lookback: int = DEFAULT_LOOKBACK,
    mode: AnchorMode = AnchorMode.BY_CONTAINING_BLOCK,
) -> float:
    """Mean per-block percentage of window transactions priced strictly below.

    Empty blocks are excluded from the mean; raises EmptyWindow when the
    window has no non-empty block at all.
    """
    window = _resolve_window(chain, anchor, lookback, mode)
    pcts = []
    for block in window:
        n = len(block.transactions)
        if n == 0:
            continue
        below = sum(1 for tx in block.transactions if tx.gas_price_gwei < price)
        pcts.append(100.0 * below / n)
    if not pcts:
        raise EmptyWindow(f"every block in the window before anchor {anchor} is empty")
    return float(sum(pcts) / len(pcts))


class FeatureComputer:
    """Vectorized feature computation over one immutable chain.

    Caches a sorted price array per block so a window evaluation is one
    searchsorted per (block, price batch).
    """

    def __init__(self, chain: ChainView, lookback: int = DEFAULT_LOOKBACK):
        self.chain = chain
        self.lookback = lookback
        self._sorted = [
            np.sort(np.array([tx.gas_price_gwei for tx in b.transactions], dtype=float))
            for b in chain.blocks
        ]
        self._index_of = {b.number: i for i, b in enumerate(chain.blocks)}

    def _pct_matrix_mean(self, window: Sequence[Block], prices: np.ndarray) -> np.ndarray:
        """Mean over non-empty window blocks of the pct-below vector for prices."""
        total = np.zeros(prices.size)
        n_blocks = 0
        for block in window:
            sorted_prices = self._sorted[self._index_of[block.number]]
            if sorted_prices.size == 0:
                continue
            below = np.searchsorted(sorted_prices, prices, side="left")
            total += 100.0 * below / sorted_prices.size
            n_blocks += 1
        if n_blocks == 0:
            raise EmptyWindow("every block in the window is empty")
        return total / n_blocks

    def for_prices(self, prices: Sequence[float], anchor: int, mode: AnchorMode) -> np.ndarray:
        """Feature values for a batch of prices under one anchor."""
        window = _resolve_window(self.chain, anchor, self.lookback, mode)
        return self._pct_matrix_mean(window, np.asarray(prices, dtype=float))


def collect_samples(
    chain: ChainView,
    lookback: int = DEFAULT_LOOKBACK,
    mode: AnchorMode = AnchorMode.BY_CONTAINING_BLOCK,
) -> tuple[list[FeatureSample], int]:
    """Feature samples for every mined transaction with a usable window.

    Transactions whose window is empty or whose block lacks quintile
    boundaries are skipped; the skip count is returned alongside the samples.
    """
    computer = FeatureComputer(chain, lookback)
    samples: list[FeatureSample] = []
    skipped = 0
    for block in chain.blocks:
        if not block.transactions:
            continue
        anchor = block.number if mode is AnchorMode.BY_CONTAINING_BLOCK else block.timestamp
        try:
            cuts = boundaries(chain, block.number, lookback)
            prices = np.array([tx.gas_price_gwei for tx in block.transactions], dtype=float)
            feats = computer.for_prices(prices, anchor, mode)
        except (EmptyWindow, InsufficientWindow):
            skipped += len(block.transactions)
            continue
        for tx, feat in zip(block.transactions, feats):
            samples.append(
                FeatureSample(
                    tx_hash=tx.hash,
                    feature_pct=float(feat),
                    actual_minutes=processing_time_minutes(tx),
                    pending_ts=tx.pending_ts,
                    price_category=categorize(tx.gas_price_gwei, cuts),
                )
            )
    return samples, skipped
