"""Sliding-time-window bootstrap validation and accuracy metrics.

The dataset is windowed by UTC day: four training days followed by one test
day, sliding one day at a time. Each window draws bootstrap resamples of the
training transactions, fits the linear estimator on every resample, and
records the mean absolute error per test transaction across resamples.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .chainmodel import ChainView
from .errors import LengthMismatch, MissingSourcePrediction, NoRecords, SpanTooShort
from .features import AnchorMode, collect_samples
from .pricing import DEFAULT_LOOKBACK, PriceCategory
from . import stats

SECONDS_PER_DAY = 86400


@dataclass(frozen=True, slots=True)
class WindowSpec:
    """Validation window geometry and bootstrap parameters."""

    seed: int
    window_days: int = 5
    train_days: int = 4
    test_days: int = 1
    slide_days: int = 1
    bootstrap_reps: int = 100

    def __post_init__(self):
        if min(self.window_days, self.train_days, self.test_days, self.slide_days) < 1:
            raise ValueError("window geometry must be positive")
        if self.train_days + self.test_days != self.window_days:
            raise ValueError("train_days + test_days must equal window_days")
        if self.bootstrap_reps < 1:
            raise ValueError("bootstrap_reps must be >= 1")


DayInterval = tuple[int, int]


def sliding_windows(dataset_span_days: int, spec: WindowSpec) -> list[tuple[DayInterval, DayInterval]]:
    """(train, test) day-offset intervals, anchored at day 0, 1, 2, ...

    Intervals are half-open [start_day, end_day). With a one-day slide the
    count is span - window + 1.
    """
    if dataset_span_days < spec.window_days:
        raise SpanTooShort(
            f"span {dataset_span_days}d shorter than window {spec.window_days}d"
        )
    out = []
    anchor = 0
    while anchor + spec.window_days <= dataset_span_days:
        train = (anchor, anchor + spec.train_days)
        test = (anchor + spec.train_days, anchor + spec.window_days)
        out.append((train, test))
        anchor += spec.slide_days
    return out


@dataclass(frozen=True, slots=True)
class TxRecord:
    tx_hash: str
    category: Optional[PriceCategory]
    actual_minutes: float
    mean_ae_minutes: float


@dataclass(frozen=True, slots=True)
class AccuracyMetrics:
    """MAE/MedAE over absolute errors; MAPE/MedAPE over records with actual > 0."""

    n: int
    mae: float
    medae: float
    mape: Optional[float]
    medape: Optional[float]
    ape_excluded: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mae": self.mae,
            "medae": self.medae,
            "mape": self.mape,
            "medape": self.medape,
            "ape_excluded": self.ape_excluded,
        }


def accuracy_metrics(records: Iterable[tuple[float, float]]) -> AccuracyMetrics:
    """Metrics over (absolute_error, actual) pairs."""
    pairs = list(records)
    if not pairs:
        raise NoRecords("no records to score")
    ae = np.array([p[0] for p in pairs], dtype=float)
    actual = np.array([p[1] for p in pairs], dtype=float)
    positive = actual > 0
    excluded = int(np.count_nonzero(~positive))
    ape = 100.0 * ae[positive] / actual[positive]
    return AccuracyMetrics(
        n=len(pairs),
        mae=float(ae.mean()),
        medae=float(np.median(ae)),
        mape=float(ape.mean()) if ape.size else None,
        medape=float(np.median(ape)) if ape.size else None,
        ape_excluded=excluded,
    )


@dataclass(frozen=True, slots=True)
class WindowOutcome:
    """Bookkeeping for one validation window."""

    index: int
    train_interval: DayInterval
    test_interval: DayInterval
    n_train: int
    n_test: int
    reps_ok: int
    reps_failed: int


@dataclass(frozen=True, slots=True)
class EvaluationReport:
    records: tuple[TxRecord, ...]
    windows: tuple[WindowOutcome, ...]
    lookback: int
    seed: int

    def metrics(self, category: Optional[PriceCategory] = None) -> AccuracyMetrics:
        pool = [
            (r.mean_ae_minutes, r.actual_minutes)
            for r in self.records
            if category is None or r.category == category
        ]
        return accuracy_metrics(pool)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("tx_hash,category,actual_minutes,mean_ae_minutes\n")
        for r in self.records:
            label = r.category.label if r.category is not None else ""
            out.write(f"{r.tx_hash},{label},{r.actual_minutes!r},{r.mean_ae_minutes!r}\n")
        return out.getvalue()

    def aggregates_json(self) -> str:
        per_category = {}
        for cat in PriceCategory:
            subset = [r for r in self.records if r.category == cat]
            if subset:
                per_category[cat.label] = self.metrics(cat).to_dict()
        body = {
            "seed": self.seed,
            "lookback": self.lookback,
            "n_records": len(self.records),
            "global": self.metrics().to_dict() if self.records else None,
            "per_category": per_category,
            "windows": [
                {
                    "index": w.index,
                    "train_days": list(w.train_interval),
                    "test_days": list(w.test_interval),
                    "n_train": w.n_train,
                    "n_test": w.n_test,
                    "reps_ok": w.reps_ok,
                    "reps_failed": w.reps_failed,
                }
                for w in self.windows
            ],
        }
        return json.dumps(body, indent=2, sort_keys=True)


def _rep_rng(seed: int, window_index: int, rep_index: int) -> np.random.Generator:
    """Independent, platform-stable stream per (seed, window, rep)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(window_index, rep_index)))
    )


def _run_window(
    w_idx: int,
    train_iv: DayInterval,
    test_iv: DayInterval,
    spec: WindowSpec,
    resample: bool,
    masks: tuple[np.ndarray, np.ndarray],
    arrays: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> tuple[WindowOutcome, Optional[np.ndarray], np.ndarray]:
    """Bootstrap one window; AEs are summed in rep-index order."""
    train_mask, test_mask = masks
    log_feats, log_actual, actual = arrays
    n_train = int(train_mask.sum())
    n_test = int(test_mask.sum())
    if n_train < 2 or n_test == 0:
        return WindowOutcome(w_idx, train_iv, test_iv, n_train, n_test, 0, 0), None, test_mask
    x_train = log_feats[train_mask]
    y_train = log_actual[train_mask]
    x_test = log_feats[test_mask]
    actual_test = actual[test_mask]

    ae_sum = np.zeros(n_test)
    reps_ok = 0
    reps_failed = 0
    for rep in range(spec.bootstrap_reps):
        if resample:
            rng = _rep_rng(spec.seed, w_idx, rep)
            idx = rng.integers(0, n_train, size=n_train)
            xs, ys = x_train[idx], y_train[idx]
        else:
            xs, ys = x_train, y_train
        if np.all(xs == xs[0]):
            reps_failed += 1
            continue
        dx = xs - xs.mean()
        sxx = float((dx * dx).sum())
        if sxx == 0.0:
            reps_failed += 1
            continue
        slope = float((dx * (ys - ys.mean())).sum()) / sxx
        intercept = float(ys.mean() - slope * xs.mean())
        pred = np.maximum(0.0, np.expm1(intercept + slope * x_test))
        ae_sum = ae_sum + np.abs(actual_test - pred)
        reps_ok += 1
    outcome = WindowOutcome(w_idx, train_iv, test_iv, n_train, n_test, reps_ok, reps_failed)
    if reps_ok == 0:
        return outcome, None, test_mask
    return outcome, ae_sum / reps_ok, test_mask


def validate(
    chain: ChainView,
    spec: WindowSpec,
    lookback: int = DEFAULT_LOOKBACK,
    *,
    resample: bool = True,
    max_workers: int = 1,
) -> EvaluationReport:
    """Run the sliding-window bootstrap over a chain.

    Windows are independent; ``max_workers > 1`` evaluates them on a thread
    pool with results assembled in window order, so the report is identical
    to a sequential run. ``resample=False`` is a test hook making every rep
    fit the full training set. Failed reps (degenerate resamples) are
    skipped, never redrawn; a window contributes records only if at least
    one rep succeeded.
    """
    samples, _ = collect_samples(chain, lookback, AnchorMode.BY_CONTAINING_BLOCK)
    if not samples:
        raise SpanTooShort("no usable samples on this chain")
    pending = np.array([s.pending_ts for s in samples], dtype=np.int64)
    feats = np.array([s.feature_pct for s in samples], dtype=float)
    actual = np.array([s.actual_minutes for s in samples], dtype=float)
    arrays = (np.log1p(feats), np.log1p(actual), actual)

    day0 = int(pending.min() // SECONDS_PER_DAY)
    span = int(pending.max() // SECONDS_PER_DAY) - day0 + 1
    windows = sliding_windows(span, spec)
    base_ts = day0 * SECONDS_PER_DAY

    def masks_for(train_iv, test_iv):
        train_mask = (pending >= base_ts + train_iv[0] * SECONDS_PER_DAY) & (
            pending < base_ts + train_iv[1] * SECONDS_PER_DAY
        )
        test_mask = (pending >= base_ts + test_iv[0] * SECONDS_PER_DAY) & (
            pending < base_ts + test_iv[1] * SECONDS_PER_DAY
        )
        return train_mask, test_mask

    jobs = [
        (w_idx, train_iv, test_iv, spec, resample, masks_for(train_iv, test_iv), arrays)
        for w_idx, (train_iv, test_iv) in enumerate(windows)
    ]
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda job: _run_window(*job), jobs))
    else:
        results = [_run_window(*job) for job in jobs]

    records: list[TxRecord] = []
    outcomes: list[WindowOutcome] = []
    for outcome, mean_ae, test_mask in results:
        outcomes.append(outcome)
        if mean_ae is None:
            continue
        for sample_idx, ae in zip(np.nonzero(test_mask)[0], mean_ae):
            s = samples[int(sample_idx)]
            records.append(
                TxRecord(
                    tx_hash=s.tx_hash,
                    category=s.price_category,
                    actual_minutes=s.actual_minutes,
                    mean_ae_minutes=float(ae),
                )
            )
    return EvaluationReport(
        records=tuple(records), windows=tuple(outcomes), lookback=lookback, seed=spec.seed
    )


# ---------------------------------------------------------------------------
# state-of-the-practice ensemble

CHEAP_CATEGORIES = (PriceCategory.VERY_CHEAP, PriceCategory.CHEAP)


@dataclass(frozen=True, slots=True)
class EnsembleRouter:
    """Routes each price category to one external predictor."""

    route: Mapping[PriceCategory, str]

    def __post_init__(self):
        missing = [c for c in PriceCategory if c not in self.route]
        if missing:
            raise ValueError(f"router must cover all categories; missing {missing}")

    @classmethod
    def two_way(cls, cheap_source: str, other_source: str) -> "EnsembleRouter":
        """The standard split: cheap categories to one source, rest to the other."""
        return cls(
            route={
                cat: (cheap_source if cat in CHEAP_CATEGORIES else other_source)
                for cat in PriceCategory
            }
        )


def ensemble_predict(
    router: EnsembleRouter,
    per_source: Mapping[str, float],
    category: PriceCategory,
) -> float:
    """The routed source's prediction, passed through unchanged."""
    source = router.route[category]
    if source not in per_source:
        raise MissingSourcePrediction(f"no prediction from source {source!r}")
    return per_source[source]


@dataclass(frozen=True, slots=True)
class PairedComparison:
    wilcoxon_p: float
    cliffs_delta: float
    magnitude: str


def paired_compare(ae_ours: Sequence[float], ae_other: Sequence[float]) -> PairedComparison:
    """Wilcoxon signed-rank plus Cliff's delta on paired AE lists."""
    if len(ae_ours) != len(ae_other):
        raise LengthMismatch(f"{len(ae_ours)} vs {len(ae_other)} paired values")
    if len(ae_ours) < 5:
        raise ValueError("need at least 5 pairs")
    diffs = np.asarray(ae_ours, dtype=float) - np.asarray(ae_other, dtype=float)
    test = stats.wilcoxon_signed_rank(diffs)
    delta, magnitude = stats.cliffs_delta(ae_ours, ae_other)
    return PairedComparison(wilcoxon_p=test.p_value, cliffs_delta=delta, magnitude=magnitude)
