import numpy as np
import pytest

from gastimate.chainmodel import ChainView
from gastimate.errors import EmptyInput, InsufficientWindow
from gastimate.pricing import CategoryBoundaries, PriceCategory, boundaries, categorize, quantile

from conftest import make_block


class TestQuantile:
    def test_interpolated_one_to_hundred(self):
        values = list(range(1, 101))
        assert quantile(values, 0.2) == pytest.approx(20.8, abs=1e-12)

    def test_endpoints(self):
        values = [3.0, 7.0, 9.0, 40.0]
        assert quantile(values, 0.0) == 3.0
        assert quantile(values, 1.0) == 40.0

    def test_constant(self):
        assert quantile([5, 5, 5], 0.37) == 5.0

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            quantile([], 0.5)

    def test_matches_numpy_linear_method(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            values = np.sort(rng.uniform(0, 50, size=rng.integers(1, 40)))
            q = float(rng.uniform(0, 1))
            assert quantile(values.tolist(), q) == pytest.approx(
                float(np.quantile(values, q, method="linear")), abs=1e-9
            )


def chain_with_pool(prices_per_block):
    """One block per list of prices, plus a final anchor block."""
    blocks = []
    for i, prices in enumerate(prices_per_block, start=1):
        blocks.append(make_block(i, i * 10, [(p, i * 10 - 5) for p in prices]))
    anchor = len(prices_per_block) + 1
    blocks.append(make_block(anchor, anchor * 10, [(1.0, anchor * 10 - 5)]))
    return ChainView(blocks), anchor


class TestBoundaries:
    def test_pool_1_to_100(self):
        chain, anchor = chain_with_pool([range(1, 51), range(51, 101)])
        cuts = boundaries(chain, anchor, lookback=120)
        assert cuts.as_tuple() == pytest.approx((20.8, 40.6, 60.4, 80.2), abs=1e-12)
        assert cuts.sample_size == 100
        assert cuts.reference_block == anchor

    def test_degenerate_pool(self):
        chain, anchor = chain_with_pool([[5, 5, 5], [5, 5]])
        cuts = boundaries(chain, anchor, lookback=120)
        assert cuts.as_tuple() == (5, 5, 5, 5)

    def test_insufficient_pool(self):
        chain, anchor = chain_with_pool([[1.0, 2.0, 3.0]])
        with pytest.raises(InsufficientWindow):
            boundaries(chain, anchor, lookback=120)

    def test_duplicates_pooled_with_multiplicity(self):
        # same multiset split differently across blocks gives identical cuts
        chain_a, anchor_a = chain_with_pool([[1, 1, 1, 1, 10, 10]])
        chain_b, anchor_b = chain_with_pool([[1, 1], [1, 1, 10, 10]])
        assert boundaries(chain_a, anchor_a).as_tuple() == boundaries(chain_b, anchor_b).as_tuple()


class TestCategorize:
    CUTS = CategoryBoundaries(20.8, 40.6, 60.4, 80.2, reference_block=1, lookback=120, sample_size=100)

    def test_regular_price(self):
        assert categorize(50.0, self.CUTS) is PriceCategory.REGULAR

    def test_degenerate_boundaries_absorb_lower(self):
        cuts = CategoryBoundaries(5, 5, 5, 5, reference_block=1, lookback=120, sample_size=5)
        assert categorize(5.0, cuts) is PriceCategory.VERY_CHEAP
        assert categorize(5.0001, cuts) is PriceCategory.VERY_EXPENSIVE

    def test_above_max(self):
        assert categorize(1e6, self.CUTS) is PriceCategory.VERY_EXPENSIVE

    def test_monotone_in_price(self):
        rng = np.random.default_rng(3)
        prices = np.sort(rng.uniform(0, 120, size=200))
        cats = [categorize(float(p), self.CUTS) for p in prices]
        assert all(a <= b for a, b in zip(cats, cats[1:]))

    def test_category_order(self):
        assert (
            PriceCategory.VERY_CHEAP
            < PriceCategory.CHEAP
            < PriceCategory.REGULAR
            < PriceCategory.EXPENSIVE
            < PriceCategory.VERY_EXPENSIVE
        )

    def test_balanced_fractions_on_distinct_pool(self):
        # quintile split puts 20% +- one element in each category
        rng = np.random.default_rng(5)
        pool = rng.permutation(np.linspace(1.0, 500.0, 800))
        half = [pool[i : i + 80] for i in range(0, 800, 80)]
        chain, anchor = chain_with_pool(half)
        cuts = boundaries(chain, anchor, lookback=120)
        counts = {c: 0 for c in PriceCategory}
        for p in pool:
            counts[categorize(float(p), cuts)] += 1
        for c, n in counts.items():
            assert abs(n - 160) <= 1, (c, counts)


class TestLookbackSensitivity:
    def test_boundaries_stable_across_lookbacks(self):
        # mirrors the lookback sensitivity analysis: cuts differ < 25% pairwise
        from gastimate.synthchain import SynthConfig, generate

        chain = generate(SynthConfig(seed=909, n_blocks=300, block_capacity=8, arrival_rate=6.0))
        anchor = 300
        cuts = {
            lb: boundaries(chain, anchor, lookback=lb).as_tuple()
            for lb in (60, 120, 180, 200, 240)
        }
        values = list(cuts.values())
        for a in values:
            for b in values:
                for qa, qb in zip(a, b):
                    assert abs(qa - qb) / max(qa, qb) < 0.25
