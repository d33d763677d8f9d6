"""Core ledger data model: transactions, blocks, chain views, processing times.

A transaction's processing time is the delta between the instant it was first
observed pending and the timestamp of the block that included it, reported in
minutes. The chain view is immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import EmptyWindow, InvariantViolation, MissingProcessedTimestamp, NegativeDuration

SECONDS_PER_MINUTE = 60.0


@dataclass(frozen=True, slots=True)
class Transaction:
    """One transaction with its observation and inclusion timestamps.

    ``pending_ts`` / ``processed_ts`` are integer Unix seconds. Unmined
    transactions carry ``block_number = None`` and ``processed_ts = None``.
    """

    hash: str
    sender: str
    nonce: int
    gas_price_gwei: float
    pending_ts: int
    gas_used: Optional[int] = None
    block_number: Optional[int] = None
    processed_ts: Optional[int] = None

    def __post_init__(self):
        if self.gas_price_gwei < 0:
            raise InvariantViolation(f"tx {self.hash}: negative gas price")
        if self.nonce < 0:
            raise InvariantViolation(f"tx {self.hash}: negative nonce")
        if self.block_number is not None and self.processed_ts is None:
            raise InvariantViolation(f"tx {self.hash}: block_number set but no processed_ts")


@dataclass(frozen=True, slots=True)
class Block:
    """A mined block; every contained tx is stamped with the block's number/time."""

    number: int
    timestamp: int
    transactions: tuple[Transaction, ...]

    def __post_init__(self):
        for tx in self.transactions:
            if tx.block_number != self.number:
                raise InvariantViolation(
                    f"block {self.number}: tx {tx.hash} has block_number {tx.block_number}"
                )
            if tx.processed_ts != self.timestamp:
                raise InvariantViolation(
                    f"block {self.number}: tx {tx.hash} processed_ts != block timestamp"
                )
            if tx.pending_ts > self.timestamp:
                raise InvariantViolation(
                    f"block {self.number}: tx {tx.hash} pending_ts after block timestamp"
                )


class ChainView:
    """Read-only view over an ordered sequence of blocks.

    Validates on construction: block numbers and timestamps strictly
    increasing, no duplicate transaction hashes. Lookup by block number and
    by transaction hash is O(1); range queries use bisection over the sorted
    number list.
    """

    __slots__ = ("blocks", "_numbers", "_by_number", "_by_hash")

    def __init__(self, blocks: Iterable[Block]):
        blocks = tuple(blocks)
        numbers = [b.number for b in blocks]
        for prev, cur in zip(blocks, blocks[1:]):
            if cur.number <= prev.number:
                raise InvariantViolation(
                    f"block numbers not strictly increasing at {prev.number} -> {cur.number}"
                )
            if cur.timestamp <= prev.timestamp:
                raise InvariantViolation(
                    f"block timestamps not strictly increasing at block {cur.number}"
                )
        by_hash: dict[str, Transaction] = {}
        for b in blocks:
            for tx in b.transactions:
                if tx.hash in by_hash:
                    raise InvariantViolation(f"duplicate transaction hash {tx.hash}")
                by_hash[tx.hash] = tx
        self.blocks = blocks
        self._numbers = numbers
        self._by_number = {b.number: b for b in blocks}
        self._by_hash = by_hash

    def __len__(self) -> int:
        return len(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChainView) and self.blocks == other.blocks

    def block(self, number: int) -> Block:
        return self._by_number[number]

    def __contains__(self, number: int) -> bool:
        return number in self._by_number

    def tx(self, tx_hash: str) -> Transaction:
        return self._by_hash[tx_hash]

    @property
    def head(self) -> Optional[Block]:
        return self.blocks[-1] if self.blocks else None

    def transactions(self) -> Iterable[Transaction]:
        for b in self.blocks:
            yield from b.transactions

    def blocks_in_range(self, lo: int, hi: int) -> tuple[Block, ...]:
        """Blocks with number in [lo, hi], ordered. Gaps are simply absent."""
        i = bisect.bisect_left(self._numbers, lo)
        j = bisect.bisect_right(self._numbers, hi)
        return self.blocks[i:j]

    def blocks_at_or_before(self, ts: int, count: int) -> tuple[Block, ...]:
        """The most recent up-to-``count`` blocks whose timestamp <= ts."""
        j = bisect.bisect_right([b.timestamp for b in self.blocks], ts)
        return self.blocks[max(0, j - count):j]


def processing_time_minutes(tx: Transaction) -> float:
    """Minutes elapsed from pending to processed.

    Raises MissingProcessedTimestamp for unmined transactions and
    NegativeDuration when processed precedes pending (corrupt input).
    """
    if tx.processed_ts is None:
        raise MissingProcessedTimestamp(f"tx {tx.hash} is not mined")
    if tx.processed_ts < tx.pending_ts:
        raise NegativeDuration(
            f"tx {tx.hash}: processed_ts {tx.processed_ts} < pending_ts {tx.pending_ts}"
        )
    return (tx.processed_ts - tx.pending_ts) / SECONDS_PER_MINUTE


def window_before(chain: ChainView, block_number: int, lookback: int) -> tuple[Block, ...]:
    """The up-to-``lookback`` blocks preceding ``block_number``.

    Returns blocks with numbers in [block_number - lookback, block_number - 1]
    that exist in the chain, ordered. Truncates near the chain start; raises
    EmptyWindow when no predecessor exists at all.
    """
    if block_number not in chain:
        raise KeyError(f"block {block_number} not in chain")
    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    window = chain.blocks_in_range(block_number - lookback, block_number - 1)
    if not window:
        raise EmptyWindow(f"no blocks before {block_number} within lookback {lookback}")
    return window
