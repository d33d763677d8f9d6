"""Single-feature ordinary least squares estimator in log1p space.

The model regresses log(1 + minutes) on log(1 + feature_pct); predictions are
mapped back with expm1 and clamped at zero. A lookup table evaluates the model
over a price grid at a given chain head.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .chainmodel import ChainView
from .errors import DegenerateDesign
from .features import AnchorMode, FeatureComputer
from .pricing import DEFAULT_LOOKBACK, PriceCategory, boundaries, categorize


@dataclass(frozen=True, slots=True)
class LinearModel:
    """OLS fit y = a + b*x with x = log1p(feature_pct), y = log1p(minutes)."""

    intercept_a: float
    slope_b: float
    n_train: int
    train_from: int
    train_to: int
    lookback: int

    def __post_init__(self):
        if self.n_train < 2:
            raise ValueError("n_train must be >= 2")
        if not (np.isfinite(self.intercept_a) and np.isfinite(self.slope_b)):
            raise ValueError("coefficients must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "intercept_a": self.intercept_a,
                "slope_b": self.slope_b,
                "n_train": self.n_train,
                "train_from": self.train_from,
                "train_to": self.train_to,
                "lookback": self.lookback,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        d = json.loads(text)
        return cls(
            intercept_a=float(d["intercept_a"]),
            slope_b=float(d["slope_b"]),
            n_train=int(d["n_train"]),
            train_from=int(d["train_from"]),
            train_to=int(d["train_to"]),
            lookback=int(d["lookback"]),
        )


@dataclass(frozen=True, slots=True)
class LookupRow:
    gas_price_gwei: float
    category: PriceCategory
    predicted_minutes: float


@dataclass(frozen=True, slots=True)
class LookupTable:
    """Per-price predictions at one chain head, ordered by ascending price."""

    head_block: int
    rows: tuple[LookupRow, ...]
    monotone_ok: bool

    def to_dict(self) -> dict:
        return {
            "head_block": self.head_block,
            "rows": [
                {
                    "gas_price_gwei": r.gas_price_gwei,
                    "category": r.category.label,
                    "predicted_minutes": r.predicted_minutes,
                }
                for r in self.rows
            ],
            "monotone_ok": self.monotone_ok,
        }


def fit_arrays(
    feature_pct: np.ndarray,
    minutes: np.ndarray,
    *,
    train_range: tuple[int, int] = (0, 0),
    lookback: int = DEFAULT_LOOKBACK,
) -> LinearModel:
    """Closed-form OLS on transformed arrays; the fast path for bootstrap loops."""
    x = np.log1p(np.asarray(feature_pct, dtype=float))
    y = np.log1p(np.asarray(minutes, dtype=float))
    if x.size < 2:
        raise DegenerateDesign("need at least 2 samples")
    if np.all(x == x[0]):
        raise DegenerateDesign("all feature values identical")
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    sxx = float((dx * dx).sum())
    if sxx == 0.0:
        raise DegenerateDesign("all feature values identical")
    slope = float((dx * (y - y_mean)).sum()) / sxx
    intercept = float(y_mean - slope * x_mean)
    return LinearModel(
        intercept_a=intercept,
        slope_b=slope,
        n_train=int(x.size),
        train_from=train_range[0],
        train_to=train_range[1],
        lookback=lookback,
    )


def fit(
    samples: Iterable[tuple[float, float]],
    *,
    train_range: tuple[int, int] = (0, 0),
    lookback: int = DEFAULT_LOOKBACK,
) -> LinearModel:
    """Fit from (feature_pct, actual_minutes) pairs."""
    pairs = list(samples)
    if len(pairs) < 2:
        raise DegenerateDesign("need at least 2 samples")
    f = np.array([p[0] for p in pairs], dtype=float)
    m = np.array([p[1] for p in pairs], dtype=float)
    return fit_arrays(f, m, train_range=train_range, lookback=lookback)


def predict(model: LinearModel, feature_pct: float) -> float:
    """Predicted minutes for one feature value, clamped at zero."""
    raw = np.expm1(model.intercept_a + model.slope_b * np.log1p(feature_pct))
    return float(max(0.0, raw))


def predict_many(model: LinearModel, feature_pct: np.ndarray) -> np.ndarray:
    """Vectorized predict."""
    raw = np.expm1(model.intercept_a + model.slope_b * np.log1p(np.asarray(feature_pct, dtype=float)))
    return np.maximum(0.0, raw)


def lookup_table(
    model: LinearModel,
    chain: ChainView,
    head_block: int,
    prices: Optional[Sequence[float]] = None,
    *,
    price_min: float = 1.0,
    price_max: float = 60.0,
    price_step: float = 1.0,
    lookback: int = DEFAULT_LOOKBACK,
    computer: Optional[FeatureComputer] = None,
) -> LookupTable:
    """Evaluate the model over a price grid at a chain head.

    Features use the prediction-time anchor (most recent blocks up to the
    head's timestamp); categories use the quintile boundaries before the head.
    ``prices`` overrides the min/max/step grid; duplicates collapse and the
    grid is sorted ascending. Passing a prebuilt FeatureComputer for the same
    chain amortizes its per-block caches across many heads.
    """
    if prices is None:
        if price_step <= 0:
            raise ValueError("price_step must be positive")
        count = int(np.floor((price_max - price_min) / price_step + 1e-9)) + 1
        grid = [price_min + i * price_step for i in range(max(0, count))]
    else:
        grid = sorted(set(float(p) for p in prices))
    if not grid:
        return LookupTable(head_block=head_block, rows=(), monotone_ok=True)
    cuts = boundaries(chain, head_block, lookback)
    if computer is None or computer.chain is not chain or computer.lookback != lookback:
        computer = FeatureComputer(chain, lookback)
    head_ts = chain.block(head_block).timestamp
    feats = computer.for_prices(grid, head_ts, AnchorMode.BY_PENDING_TIME)
    preds = predict_many(model, feats)
    rows = tuple(
        LookupRow(
            gas_price_gwei=float(p),
            category=categorize(float(p), cuts),
            predicted_minutes=float(est),
        )
        for p, est in zip(grid, preds)
    )
    monotone = all(a.predicted_minutes >= b.predicted_minutes for a, b in zip(rows, rows[1:]))
    return LookupTable(head_block=head_block, rows=rows, monotone_ok=monotone)
