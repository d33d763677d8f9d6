"""File formats and dataset loading.

Chains travel as JSON Lines, one block per line; a block's transactions imply
their processed timestamp from the block timestamp. External predictor
snapshots travel as CSV keyed by (source, retrieval timestamp, gas price).
The join maps every transaction to the latest snapshot strictly before its
pending timestamp and, within that snapshot, to the closest listed price.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

from .chainmodel import Block, ChainView, Transaction
from .errors import InvariantViolation, ParseError

PREDICTIONS_HEADER = ["source_id", "retrieval_ts", "gas_price_gwei", "predicted_minutes"]


@dataclass(frozen=True, slots=True)
class ExternalPrediction:
    """One predictor entry from a periodic snapshot."""

    source_id: str
    retrieval_ts: int
    gas_price_gwei: float
    predicted_minutes: float

    def __post_init__(self):
        if self.predicted_minutes < 0:
            raise InvariantViolation("predicted_minutes must be >= 0")


@dataclass(frozen=True, slots=True)
class JoinedPrediction:
    tx_hash: str
    source_id: str
    predicted_minutes: float
    matched_retrieval_ts: int
    matched_gas_price_gwei: float


@dataclass(frozen=True, slots=True)
class JoinSummary:
    """Join bookkeeping: matches made and txs without a prior snapshot."""

    joined: tuple[JoinedPrediction, ...]
    omitted: dict[str, int]

    def omitted_total(self) -> int:
        return sum(self.omitted.values())


# ---------------------------------------------------------------------------
# blocks JSONL

def _parse_block(obj: dict, line_no: int) -> Block:
    try:
        number = int(obj["number"])
        timestamp = int(obj["timestamp"])
        raw_txs = obj["txs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad block record: {exc}", line=line_no) from exc
    txs = []
    for raw in raw_txs:
        try:
            gas_used = raw.get("gas_used")
            txs.append(
                Transaction(
                    hash=str(raw["hash"]),
                    sender=str(raw["sender"]),
                    nonce=int(raw["nonce"]),
                    gas_price_gwei=float(raw["gas_price_gwei"]),
                    pending_ts=int(raw["pending_ts"]),
                    gas_used=None if gas_used is None else int(gas_used),
                    block_number=number,
                    processed_ts=timestamp,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad tx record: {exc}", line=line_no) from exc
    return Block(number=number, timestamp=timestamp, transactions=tuple(txs))


def parse_chain(lines: Iterable[str]) -> ChainView:
    """Parse block-per-line JSON into a validated chain view."""
    blocks = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
        blocks.append(_parse_block(obj, line_no))
    return ChainView(blocks)


def load_chain(path: Union[str, Path]) -> ChainView:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_chain(fh)


def chain_to_jsonl(chain: ChainView) -> str:
    """Serialize with fixed key order so saves are byte-stable."""
    out = io.StringIO()
    for block in chain.blocks:
        record = {
            "number": block.number,
            "timestamp": block.timestamp,
            "txs": [
                {
                    "hash": tx.hash,
                    "sender": tx.sender,
                    "nonce": tx.nonce,
                    "gas_price_gwei": tx.gas_price_gwei,
                    "gas_used": tx.gas_used,
                    "pending_ts": tx.pending_ts,
                }
                for tx in block.transactions
            ],
        }
        out.write(json.dumps(record, separators=(",", ":")))
        out.write("\n")
    return out.getvalue()


def save_chain(chain: ChainView, path: Union[str, Path]) -> None:
    Path(path).write_text(chain_to_jsonl(chain), encoding="utf-8")


# ---------------------------------------------------------------------------
# external predictions CSV

def parse_predictions(fh: TextIO) -> list[ExternalPrediction]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty predictions file (header required)", line=1)
    if [h.strip() for h in header] != PREDICTIONS_HEADER:
        raise ParseError(f"expected header {','.join(PREDICTIONS_HEADER)}", line=1)
    out = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            out.append(
                ExternalPrediction(
                    source_id=row[0].strip(),
                    retrieval_ts=int(row[1]),
                    gas_price_gwei=float(row[2]),
                    predicted_minutes=float(row[3]),
                )
            )
        except (IndexError, ValueError) as exc:
            raise ParseError(f"bad prediction row: {exc}", line=line_no) from exc
    return out


def load_predictions(path: Union[str, Path]) -> list[ExternalPrediction]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_predictions(fh)


def save_predictions(preds: Sequence[ExternalPrediction], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_HEADER)
        for p in preds:
            writer.writerow([p.source_id, p.retrieval_ts, repr(p.gas_price_gwei), repr(p.predicted_minutes)])


# ---------------------------------------------------------------------------
# snapshot join

class _SourceIndex:
    """Per-source snapshots sorted by retrieval time, prices sorted within."""

    def __init__(self, preds: Sequence[ExternalPrediction]):
        snapshots: dict[int, list[ExternalPrediction]] = defaultdict(list)
        for p in preds:
            snapshots[p.retrieval_ts].append(p)
        self.times = sorted(snapshots)
        self.entries = {}
        for ts, items in snapshots.items():
            # canonical within-snapshot order: by price, then by predicted value
            # (duplicate prices resolve to the smallest prediction)
            items = sorted(items, key=lambda p: (p.gas_price_gwei, p.predicted_minutes))
            self.entries[ts] = items

    def match(self, pending_ts: int, price: float) -> Optional[ExternalPrediction]:
        i = bisect.bisect_left(self.times, pending_ts)  # latest ts strictly below
        if i == 0:
            return None
        snapshot = self.entries[self.times[i - 1]]
        prices = [e.gas_price_gwei for e in snapshot]
        j = bisect.bisect_left(prices, price)
        if j == 0:
            return snapshot[0]
        if j == len(prices):
            return snapshot[-1]
        # equidistant resolves to the lower price
        if price - prices[j - 1] <= prices[j] - price:
            return snapshot[j - 1]
        return snapshot[j]


def join_predictions(chain: ChainView, preds: Sequence[ExternalPrediction]) -> JoinSummary:
    """Join predictor snapshots to every mined transaction, per source.

    For each (tx, source) pair the snapshot with the largest retrieval
    timestamp strictly below the tx pending timestamp wins; inside it, the
    entry with the closest gas price (ties to the lower price). Transactions
    with no prior snapshot are omitted and counted. The result is independent
    of the input ordering of ``preds``.
    """
    by_source: dict[str, list[ExternalPrediction]] = defaultdict(list)
    for p in preds:
        by_source[p.source_id].append(p)
    indexes = {src: _SourceIndex(items) for src, items in by_source.items()}
    sources = sorted(indexes)
    joined: list[JoinedPrediction] = []
    omitted: dict[str, int] = {src: 0 for src in sources}
    for block in chain.blocks:
        for tx in block.transactions:
            for src in sources:
                entry = indexes[src].match(tx.pending_ts, tx.gas_price_gwei)
                if entry is None:
                    omitted[src] += 1
                    continue
                joined.append(
                    JoinedPrediction(
                        tx_hash=tx.hash,
                        source_id=src,
                        predicted_minutes=entry.predicted_minutes,
                        matched_retrieval_ts=entry.retrieval_ts,
                        matched_gas_price_gwei=entry.gas_price_gwei,
                    )
                )
    return JoinSummary(joined=tuple(joined), omitted=omitted)
