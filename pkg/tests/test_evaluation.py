
import numpy as np
import pytest

from gastimate.chainmodel import ChainView
from gastimate.errors import (
    LengthMismatch,
    MissingSourcePrediction,
    NoRecords,
    SpanTooShort,
)
from gastimate.evaluation import (
    EnsembleRouter,
    WindowSpec,
    accuracy_metrics,
    ensemble_predict,
    paired_compare,
    sliding_windows,
    validate,
)
from gastimate.pricing import PriceCategory
from gastimate.synthchain import SynthConfig, generate


class TestSlidingWindows:
    def test_span_ten_gives_six(self):
        spec = WindowSpec(seed=1)
        windows = sliding_windows(10, spec)
        assert len(windows) == 6
        assert windows[0] == ((0, 4), (4, 5))
        assert windows[-1] == ((5, 9), (9, 10))

    def test_exact_fit_single_window(self):
        assert len(sliding_windows(5, WindowSpec(seed=1))) == 1

    def test_too_short(self):
        with pytest.raises(SpanTooShort):
            sliding_windows(4, WindowSpec(seed=1))

    def test_geometry_validated(self):
        with pytest.raises(ValueError):
            WindowSpec(seed=1, window_days=5, train_days=3, test_days=1)


class TestAccuracyMetrics:
    def test_direct_arithmetic(self):
        m = accuracy_metrics([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])
        assert m.mae == 2.0
        assert m.medae == 2.0
        assert m.mape == pytest.approx(100.0)
        assert m.medape == pytest.approx(100.0)
        assert m.ape_excluded == 0

    def test_perfect_predictions(self):
        m = accuracy_metrics([(0.0, 5.0), (0.0, 1.0)])
        assert (m.mae, m.medae, m.mape, m.medape) == (0.0, 0.0, 0.0, 0.0)

    def test_zero_actual_excluded_from_ape(self):
        m = accuracy_metrics([(1.5, 0.0)])
        assert m.mae == 1.5
        assert m.medae == 1.5
        assert m.mape is None
        assert m.medape is None
        assert m.ape_excluded == 1

    def test_no_records(self):
        with pytest.raises(NoRecords):
            accuracy_metrics([])


def day_chain(n_days, blocks_per_day=24, capacity=3, arrival=2.5, seed=99):
    """Synthetic chain spanning n_days whole UTC days."""
    interval = 86400 // blocks_per_day
    cfg = SynthConfig(
        seed=seed,
        n_blocks=n_days * blocks_per_day - 1,
        block_capacity=capacity,
        arrival_rate=arrival,
        block_interval_s=float(interval),
        n_senders=50,
    )
    return generate(cfg)


class TestValidate:
    def test_ten_day_chain_six_windows(self):
        chain = day_chain(10)
        spec = WindowSpec(seed=7, bootstrap_reps=3)
        report = validate(chain, spec, lookback=48)
        assert len(report.windows) == 6
        assert report.records

    def test_same_seed_byte_identical(self):
        chain = day_chain(6)
        spec = WindowSpec(seed=11, bootstrap_reps=5)
        a = validate(chain, spec, lookback=48)
        b = validate(chain, spec, lookback=48)
        assert a.to_csv() == b.to_csv()
        assert a.aggregates_json() == b.aggregates_json()

    def test_parallel_run_identical_to_sequential(self):
        chain = day_chain(7)
        spec = WindowSpec(seed=13, bootstrap_reps=8)
        sequential = validate(chain, spec, lookback=48)
        parallel = validate(chain, spec, lookback=48, max_workers=4)
        assert parallel.to_csv() == sequential.to_csv()
        assert parallel.aggregates_json() == sequential.aggregates_json()

    def test_noiseless_planted_chain_zero_error(self):
        # every tx sits exactly on one of two (feature, minutes) points, so
        # each window's fit recovers the line and predicts perfectly
        from conftest import make_tx
        from gastimate.chainmodel import Block

        blocks = []
        for i in range(1, 120):
            ts = 3600 * i
            txs = (
                make_tx(f"lo{i}", 2.0, ts - 600, block_number=i, processed=ts, sender=f"a{i}"),
                make_tx(f"hi{i}", 10.0, ts - 120, block_number=i, processed=ts, sender=f"b{i}"),
            )
            blocks.append(Block(number=i, timestamp=ts, transactions=txs))
        chain = ChainView(blocks)
        spec = WindowSpec(seed=3, bootstrap_reps=1)
        report = validate(chain, spec, lookback=6, resample=False)
        assert report.records
        for r in report.records:
            assert abs(r.mean_ae_minutes) < 1e-9

    def test_mean_ae_equals_mean_of_per_rep_aes(self):
        # re-derive per-rep AEs independently using the documented stream rule
        chain = day_chain(6, blocks_per_day=12)
        reps = 4
        spec = WindowSpec(seed=21, bootstrap_reps=reps)
        lookback = 24
        report = validate(chain, spec, lookback=lookback)

        from gastimate.features import AnchorMode, collect_samples

        samples, _ = collect_samples(chain, lookback, AnchorMode.BY_CONTAINING_BLOCK)
        pending = np.array([s.pending_ts for s in samples])
        feats = np.array([s.feature_pct for s in samples])
        actual = np.array([s.actual_minutes for s in samples])
        day0 = int(pending.min() // 86400)
        base = day0 * 86400
        windows = sliding_windows(int(pending.max() // 86400) - day0 + 1, spec)

        expected: dict[str, float] = {}
        for w_idx, (triv, teiv) in enumerate(windows):
            train = (pending >= base + triv[0] * 86400) & (pending < base + triv[1] * 86400)
            test = (pending >= base + teiv[0] * 86400) & (pending < base + teiv[1] * 86400)
            if train.sum() < 2 or test.sum() == 0:
                continue
            x_tr, y_tr = np.log1p(feats[train]), np.log1p(actual[train])
            per_rep = []
            for rep in range(reps):
                rng = np.random.Generator(
                    np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(w_idx, rep)))
                )
                idx = rng.integers(0, x_tr.size, size=x_tr.size)
                xs, ys = x_tr[idx], y_tr[idx]
                if np.all(xs == xs[0]):
                    continue
                dx = xs - xs.mean()
                slope = float((dx * (ys - ys.mean())).sum() / (dx * dx).sum())
                intercept = float(ys.mean() - slope * xs.mean())
                pred = np.maximum(0.0, np.expm1(intercept + slope * np.log1p(feats[test])))
                per_rep.append(np.abs(actual[test] - pred))
            mean_ae = np.sum(per_rep, axis=0) / len(per_rep)
            for i, sample_idx in enumerate(np.nonzero(test)[0]):
                expected[samples[int(sample_idx)].tx_hash] = float(mean_ae[i])

        assert expected
        got = {r.tx_hash: r.mean_ae_minutes for r in report.records}
        assert set(got) == set(expected)
        for h, ae in expected.items():
            assert got[h] == pytest.approx(ae, abs=1e-12)

    def test_metrics_per_category_partition(self):
        chain = day_chain(6)
        report = validate(chain, WindowSpec(seed=5, bootstrap_reps=2), lookback=48)
        total = sum(
            report.metrics(c).n
            for c in PriceCategory
            if any(r.category == c for r in report.records)
        )
        assert total == len([r for r in report.records if r.category is not None])


class TestEnsemble:
    ROUTER = EnsembleRouter.two_way("tracker", "api")

    def test_cheap_routes_to_first(self):
        per_source = {"tracker": 4.5, "api": 1.0}
        assert ensemble_predict(self.ROUTER, per_source, PriceCategory.VERY_CHEAP) == 4.5
        assert ensemble_predict(self.ROUTER, per_source, PriceCategory.CHEAP) == 4.5

    def test_rest_routes_to_second(self):
        per_source = {"tracker": 4.5, "api": 1.0}
        for cat in (PriceCategory.REGULAR, PriceCategory.EXPENSIVE, PriceCategory.VERY_EXPENSIVE):
            assert ensemble_predict(self.ROUTER, per_source, cat) == 1.0

    def test_missing_source(self):
        with pytest.raises(MissingSourcePrediction):
            ensemble_predict(self.ROUTER, {"api": 1.0}, PriceCategory.VERY_CHEAP)

    def test_router_must_be_total(self):
        with pytest.raises(ValueError):
            EnsembleRouter(route={PriceCategory.VERY_CHEAP: "x"})


class TestPairedCompare:
    def test_identical_lists_negligible(self):
        with pytest.raises(Exception):
            # all differences zero: wilcoxon degenerates
            paired_compare([1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0, 5.0])

    def test_dominance_negative_delta(self):
        other = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
        ours = [x - 1 for x in other]
        result = paired_compare(ours, other)
        assert result.cliffs_delta < 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            paired_compare([1, 2, 3], [1, 2])

    def test_matches_stats_kernel(self):
        rng = np.random.default_rng(61)
        ours = rng.uniform(0, 3, 30).tolist()
        other = rng.uniform(0.5, 3.5, 30).tolist()
        result = paired_compare(ours, other)
        from gastimate.stats import cliffs_delta, wilcoxon_signed_rank

        diffs = np.array(ours) - np.array(other)
        assert result.wilcoxon_p == wilcoxon_signed_rank(diffs).p_value
        assert result.cliffs_delta == cliffs_delta(ours, other)[0]
