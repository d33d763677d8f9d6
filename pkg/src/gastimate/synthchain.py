"""Deterministic fee-market simulator.

Arrivals are Poisson per block interval, prices lognormal, senders uniform.
The miner fills each block greedily by descending gas price among eligible
pending transactions; with nonce ordering enabled a transaction becomes
eligible only once every lower nonce of its sender has been mined (a sender's
chain may drain within a single block). Identical seeds produce bit-identical
chains: randomness comes from PCG64 streams spawned per purpose from the
master seed.
"""

from __future__ import annotations

import heapq
from collections import defaultdict, deque
from dataclasses import dataclass, replace

import numpy as np

from .chainmodel import Block, ChainView, Transaction
from .errors import InvalidConfig

# spawn keys for the per-purpose RNG streams
_STREAM_ARRIVALS = 0
_STREAM_PENDING = 1
_STREAM_SENDERS = 2
_STREAM_PRICES = 3


@dataclass(frozen=True, slots=True)
class SynthConfig:
    seed: int
    n_blocks: int
    block_capacity: int
    arrival_rate: float
    price_log_mu: float = 2.0
    price_log_sigma: float = 1.0
    block_interval_s: float = 15.0
    n_senders: int = 100
    nonce_ordering: bool = True

    def __post_init__(self):
        if self.n_blocks < 1:
            raise InvalidConfig("n_blocks must be >= 1")
        if self.block_capacity < 1:
            raise InvalidConfig("block_capacity must be >= 1")
        if self.arrival_rate <= 0:
            raise InvalidConfig("arrival_rate must be > 0")
        if self.block_interval_s < 1:
            raise InvalidConfig("block_interval_s must be >= 1 (integer-second timestamps)")
        if self.n_senders < 1:
            raise InvalidConfig("n_senders must be >= 1")
        if self.price_log_sigma < 0:
            raise InvalidConfig("price_log_sigma must be >= 0")


@dataclass(frozen=True, slots=True)
class SimResult:
    """Generated chain plus the transactions still pending at the end."""

    chain: ChainView
    unmined: tuple[Transaction, ...]


def _streams(seed: int) -> dict[int, np.random.Generator]:
    return {
        key: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))
        for key in (_STREAM_ARRIVALS, _STREAM_PENDING, _STREAM_SENDERS, _STREAM_PRICES)
    }


def simulate(config: SynthConfig) -> SimResult:
    """Run the fee market and return the chain with leftover pending txs."""
    rng = _streams(config.seed)
    interval = config.block_interval_s

    counts = rng[_STREAM_ARRIVALS].poisson(config.arrival_rate, size=config.n_blocks)
    total = int(counts.sum())
    offsets = rng[_STREAM_PENDING].uniform(0.0, interval, size=total)
    senders = rng[_STREAM_SENDERS].integers(0, config.n_senders, size=total)
    prices = np.exp(rng[_STREAM_PRICES].normal(config.price_log_mu, config.price_log_sigma, size=total))

    next_nonce: dict[int, int] = defaultdict(int)
    mine_watermark: dict[int, int] = defaultdict(int)
    waiting: dict[int, deque[Transaction]] = defaultdict(deque)
    eligible: list[tuple[float, int, str, Transaction, int]] = []
    blocks: list[Block] = []
    cursor = 0
    tx_counter = 0

    def push(tx: Transaction, sender: int) -> None:
        heapq.heappush(eligible, (-tx.gas_price_gwei, tx.pending_ts, tx.hash, tx, sender))

    for i in range(1, config.n_blocks + 1):
        block_ts = int(i * interval)
        k = int(counts[i - 1])
        if k:
            # arrivals of this interval, in submission (pending time) order
            batch = sorted(range(cursor, cursor + k), key=lambda j: (offsets[j], j))
            for j in batch:
                sender = int(senders[j])
                nonce = next_nonce[sender]
                next_nonce[sender] = nonce + 1
                tx = Transaction(
                    hash=f"0x{tx_counter:010x}",
                    sender=f"s{sender:05d}",
                    nonce=nonce,
                    gas_price_gwei=float(prices[j]),
                    pending_ts=int((i - 1) * interval + offsets[j]),
                )
                tx_counter += 1
                if not config.nonce_ordering or nonce == mine_watermark[sender]:
                    push(tx, sender)
                else:
                    waiting[sender].append(tx)
            cursor += k

        selected: list[Transaction] = []
        while len(selected) < config.block_capacity and eligible:
            _, _, _, tx, sender = heapq.heappop(eligible)
            mined = replace(tx, block_number=i, processed_ts=block_ts)
            selected.append(mined)
            if config.nonce_ordering:
                mine_watermark[sender] = tx.nonce + 1
                queue = waiting[sender]
                if queue and queue[0].nonce == mine_watermark[sender]:
                    push(queue.popleft(), sender)
        blocks.append(Block(number=i, timestamp=block_ts, transactions=tuple(selected)))

    leftovers = [entry[3] for entry in eligible]
    for queue in waiting.values():
        leftovers.extend(queue)
    leftovers.sort(key=lambda tx: tx.hash)
    return SimResult(chain=ChainView(blocks), unmined=tuple(leftovers))


def generate(config: SynthConfig) -> ChainView:
    """Generate a chain; see simulate() for the leftover pending set."""
    return simulate(config).chain
