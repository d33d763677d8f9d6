"""Shared fixtures: tiny hand-built chains used across module tests."""

import pytest

from gastimate.chainmodel import Block, ChainView, Transaction


def make_tx(h, price, pending, block_number=None, processed=None, sender=None, nonce=0, gas_used=None):
    return Transaction(
        hash=h,
        sender=sender or f"sender-{h}",
        nonce=nonce,
        gas_price_gwei=price,
        pending_ts=pending,
        gas_used=gas_used,
        block_number=block_number,
        processed_ts=processed,
    )


def make_block(number, timestamp, price_pending_pairs, prefix=""):
    txs = tuple(
        make_tx(f"{prefix}b{number}t{i}", price, pending, block_number=number, processed=timestamp)
        for i, (price, pending) in enumerate(price_pending_pairs)
    )
    return Block(number=number, timestamp=timestamp, transactions=txs)


@pytest.fixture
def small_chain():
    """Three blocks, known prices and delays."""
    blocks = [
        make_block(1, 100, [(1.0, 40), (2.0, 50), (3.0, 60)]),
        make_block(2, 200, [(4.0, 150), (5.0, 160)]),
        make_block(3, 300, [(10.0, 250), (2.5, 260), (7.0, 270)]),
    ]
    return ChainView(blocks)
