"""Retrospective fee-savings experiment and the time-expense balance metric.

For a representative sample of blocks, every mined transaction is checked
against the model's lookup table: could a strictly cheaper price have been
predicted to meet the transaction's actual processing time, and does a real
same-block transaction at that cheaper price confirm it?
"""

from __future__ import annotations

import json
import math
import statistics as pystats
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .chainmodel import Block, ChainView, Transaction, processing_time_minutes
from .errors import EmptyWindow, InsufficientWindow
from .estimator import LinearModel, LookupTable, lookup_table
from .features import FeatureComputer
from .pricing import DEFAULT_LOOKBACK


@dataclass(frozen=True, slots=True)
class SavingsConfig:
    seed: int
    confidence: float = 0.95
    margin: float = 0.05
    price_step_gwei: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")
        if not 0.0 < self.margin < 1.0:
            raise ValueError("margin must be in (0, 1)")
        if self.price_step_gwei <= 0:
            raise ValueError("price_step_gwei must be positive")


@dataclass(frozen=True, slots=True)
class SavingOpportunity:
    g: float
    g_target: float
    g2: float
    fee_saved_fraction: float

    def __post_init__(self):
        if not (self.g2 == self.g_target < self.g):
            raise ValueError("saving requires g2 == g_target < g")


@dataclass(frozen=True, slots=True)
class FailureToSave:
    g: float
    g_target: float
    p2_minutes: float


@dataclass(frozen=True, slots=True)
class Inconclusive:
    no_candidate: bool = False


SavingsOutcome = Union[SavingOpportunity, FailureToSave, Inconclusive]


def sample_size(population: int, confidence: float = 0.95, margin: float = 0.05) -> int:
    """Cochran sample size with finite population correction, rounded up."""
    if population < 1:
        raise ValueError("population must be >= 1")
    z = pystats.NormalDist().inv_cdf(0.5 + confidence / 2.0)
    n0 = z * z * 0.25 / (margin * margin)
    n = n0 / (1.0 + (n0 - 1.0) / population)
    return min(population, math.ceil(n))


def evaluate_tx(tx: Transaction, block: Block, lookup: LookupTable) -> SavingsOutcome:
    """Classify one transaction against a lookup table built for its block.

    Candidates are table rows strictly cheaper than the tx whose predicted
    time still meets the tx's actual time; the middle candidate by price is
    verified against same-block transactions at exactly that price, taking
    the worst (largest) of their processing times.
    """
    g = tx.gas_price_gwei
    p = processing_time_minutes(tx)
    candidates = [
        row for row in lookup.rows if row.gas_price_gwei < g and row.predicted_minutes <= p
    ]
    if not candidates:
        return Inconclusive(no_candidate=True)
    g_target = candidates[len(candidates) // 2].gas_price_gwei
    witnesses = [t for t in block.transactions if t.gas_price_gwei == g_target]
    if not witnesses:
        return Inconclusive(no_candidate=False)
    p2 = max(processing_time_minutes(t) for t in witnesses)
    if p2 <= p:
        return SavingOpportunity(
            g=g, g_target=g_target, g2=g_target, fee_saved_fraction=(g - g_target) / g
        )
    return FailureToSave(g=g, g_target=g_target, p2_minutes=p2)


@dataclass(frozen=True, slots=True)
class SavingsReport:
    sampled_blocks: int
    n_txs: int
    opportunities: int
    failures: int
    inconclusive: int
    no_candidate: int  # subset of inconclusive
    saved_fraction: Optional[float]  # fee-weighted, over opportunities
    seed: int
    sample: tuple[int, ...]

    def percentages(self) -> dict[str, float]:
        if self.n_txs == 0:
            return {"saving_opportunity": 0.0, "failure_to_save": 0.0, "inconclusive": 0.0}
        return {
            "saving_opportunity": 100.0 * self.opportunities / self.n_txs,
            "failure_to_save": 100.0 * self.failures / self.n_txs,
            "inconclusive": 100.0 * self.inconclusive / self.n_txs,
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "sampled_blocks": self.sampled_blocks,
                "n_txs": self.n_txs,
                "counts": {
                    "saving_opportunity": self.opportunities,
                    "failure_to_save": self.failures,
                    "inconclusive": self.inconclusive,
                    "inconclusive_no_candidate": self.no_candidate,
                },
                "percentages": self.percentages(),
                "saved_fraction": self.saved_fraction,
                "seed": self.seed,
                "sample": list(self.sample),
            },
            indent=2,
        )


def run_experiment(
    chain: ChainView,
    model: LinearModel,
    config: SavingsConfig,
    lookback: int = DEFAULT_LOOKBACK,
) -> SavingsReport:
    """Sample blocks, evaluate every tx in each, aggregate fee-weighted savings.

    Lookup failures (no usable window at a block) mark that block's
    transactions inconclusive. Blocks are processed in number order so the
    aggregation is deterministic for a fixed seed.
    """
    n_blocks = len(chain.blocks)
    if n_blocks == 0:
        raise EmptyWindow("cannot sample from an empty chain")
    n_sample = sample_size(n_blocks, config.confidence, config.margin)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    chosen = sorted(rng.choice(n_blocks, size=n_sample, replace=False).tolist())
    computer = FeatureComputer(chain, lookback)

    opportunities = failures = inconclusive = no_candidate = n_txs = 0
    saved_weight = 0.0
    spent_weight = 0.0
    sample_numbers = []
    for idx in chosen:
        block = chain.blocks[idx]
        sample_numbers.append(block.number)
        if not block.transactions:
            continue
        max_price = max(t.gas_price_gwei for t in block.transactions)
        grid_top = int(math.floor(max_price / config.price_step_gwei))
        prices = [config.price_step_gwei * i for i in range(1, grid_top + 1)]
        lookup: Optional[LookupTable]
        try:
            lookup = lookup_table(
                model, chain, block.number, prices, lookback=lookback, computer=computer
            )
        except (EmptyWindow, InsufficientWindow):
            lookup = None
        for tx in block.transactions:
            n_txs += 1
            outcome = (
                evaluate_tx(tx, block, lookup) if lookup is not None else Inconclusive()
            )
            if isinstance(outcome, SavingOpportunity):
                opportunities += 1
                gas = tx.gas_used if tx.gas_used is not None else 1
                saved_weight += (outcome.g - outcome.g_target) * gas
                spent_weight += outcome.g * gas
            elif isinstance(outcome, FailureToSave):
                failures += 1
            else:
                inconclusive += 1
                if outcome.no_candidate:
                    no_candidate += 1
    return SavingsReport(
        sampled_blocks=len(sample_numbers),
        n_txs=n_txs,
        opportunities=opportunities,
        failures=failures,
        inconclusive=inconclusive,
        no_candidate=no_candidate,
        saved_fraction=(saved_weight / spent_weight) if spent_weight > 0 else None,
        seed=config.seed,
        sample=tuple(sample_numbers),
    )


def time_expense_balance(qos_pct: float, budget_free_pct: float) -> float:
    """Harmonic mean of the QoS percentage and the free-budget percentage."""
    for name, value in (("qos_pct", qos_pct), ("budget_free_pct", budget_free_pct)):
        if not 0.0 <= value <= 100.0:
            raise ValueError(f"{name} must be in [0, 100], got {value}")
    if qos_pct + budget_free_pct == 0.0:
        return 0.0
    return 2.0 * qos_pct * budget_free_pct / (qos_pct + budget_free_pct)
