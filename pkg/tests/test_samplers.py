import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_cards.errors import (
    EnumerationTooLargeError,
    ForeignCardError,
    InvalidSizeError,
)
from consensus_cards.rng import BitStream
from consensus_cards.samplers import (
    elementary_symmetric,
    enumerate_distribution,
    gibbs_positions,
    sample_energy,
    sample_subset_gibbs,
    sample_subset_top_c,
    sample_subset_uniform,
    topc_positions,
    uniform_positions,
)
from conftest import pooled_chisquare


def brute_force_esym(weights, k):
    """Independent oracle: sum of products over all k-subsets."""
    return sum(math.prod(combo) for combo in itertools.combinations(weights, k))


def positions_histogram(draw, n_draws):
    counts = np.zeros(1 << 12, dtype=np.int64)
    for _ in range(n_draws):
        mask = 0
        for pos in draw():
            mask |= 1 << pos
        counts[mask] += 1
    return counts


def subset_mask(positions_or_cards, universe):
    order = {v: i for i, v in enumerate(sorted(universe))}
    mask = 0
    for v in positions_or_cards:
        mask |= 1 << order[v]
    return mask


class TestSampleEnergy:
    def test_mixed(self):
        assert sample_energy({1, 3}, {1: 2, 2: 0, 3: 1}) == -3

    def test_zero_confidences(self):
        assert sample_energy({4, 7}, {4: 0, 7: 0, 9: 0}) == 0

    def test_single(self):
        assert sample_energy({1}, {1: 5}) == -5

    def test_foreign_card(self):
        with pytest.raises(ForeignCardError):
            sample_energy({2}, {1: 0, 3: 0})


class TestElementarySymmetric:
    def test_unit_weights(self):
        assert elementary_symmetric((1.0, 1.0, 1.0), 2) == 3.0

    def test_e1_is_sum(self):
        assert elementary_symmetric((2.0, 1.0, 1.0), 1) == 4.0

    def test_e0_is_one(self):
        assert elementary_symmetric((5.0, 7.0), 0) == 1.0

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            elementary_symmetric((1.0, 2.0), 3)
        with pytest.raises(ValueError):
            elementary_symmetric((1.0, 2.0), -1)

    @given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=1, max_size=12),
           st.data())
    @settings(max_examples=120, deadline=None)
    def test_matches_brute_force(self, weights, data):
        k = data.draw(st.integers(min_value=0, max_value=len(weights)))
        got = elementary_symmetric(weights, k)
        want = brute_force_esym(weights, k)
        assert got == pytest.approx(want, rel=1e-10)


class TestEnumerateDistribution:
    def test_beta_zero_exactly_uniform(self):
        dist = enumerate_distribution({1: 3, 2: 0, 3: 7, 4: 1}, c=2, beta=0.0)
        assert len(dist.entries) == 6
        for _, p in dist.entries:
            assert p == 1.0 / 6.0

    def test_single_card_weights(self):
        # confidences (1, 0, 0) at beta = ln 2 give display odds 2 : 1 : 1
        dist = enumerate_distribution({1: 1, 2: 0, 3: 0}, c=1, beta=math.log(2.0))
        probs = {next(iter(s)): p for s, p in dist.entries}
        assert probs[1] == pytest.approx(0.5, abs=1e-12)
        assert probs[2] == pytest.approx(0.25, abs=1e-12)
        assert probs[3] == pytest.approx(0.25, abs=1e-12)

    def test_shift_invariance(self):
        conf = {1: 4, 2: 0, 3: 2, 4: 1, 5: 3}
        base = enumerate_distribution(conf, c=2, beta=0.8)
        shifted = enumerate_distribution({k: v + 5 for k, v in conf.items()}, c=2, beta=0.8)
        for (s1, p1), (s2, p2) in zip(base.entries, shifted.entries):
            assert s1 == s2
            assert p1 == pytest.approx(p2, abs=1e-12)

    @given(
        st.lists(st.integers(min_value=0, max_value=8), min_size=2, max_size=6),
        st.floats(min_value=0.0, max_value=3.0),
        st.integers(min_value=1, max_value=9),
        st.data(),
    )
    @settings(max_examples=80, deadline=None)
    def test_shift_invariance_property(self, values, beta, shift, data):
        c = data.draw(st.integers(min_value=1, max_value=len(values)))
        conf = {i + 1: v for i, v in enumerate(values)}
        base = enumerate_distribution(conf, c, beta)
        moved = enumerate_distribution({k: v + shift for k, v in conf.items()}, c, beta)
        assert sum(p for _, p in base.entries) == pytest.approx(1.0, abs=1e-12)
        for (_, p1), (_, p2) in zip(base.entries, moved.entries):
            assert p1 == pytest.approx(p2, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        dist = enumerate_distribution({i: i % 4 for i in range(1, 9)}, c=3, beta=1.5)
        assert len(dist.entries) == math.comb(8, 3)
        assert sum(p for _, p in dist.entries) == pytest.approx(1.0, abs=1e-12)

    def test_cap(self):
        conf = {i: 0 for i in range(1, 22)}
        with pytest.raises(EnumerationTooLargeError):
            enumerate_distribution(conf, c=10, beta=0.0)  # comb(21,10) = 352716
        small = {i: 0 for i in range(1, 21)}
        enumerate_distribution(small, c=10, beta=0.0)  # comb(20,10) = 184756, ok

    def test_bad_beta(self):
        with pytest.raises(ValueError):
            enumerate_distribution({1: 0, 2: 0}, c=1, beta=float("inf"))
        with pytest.raises(ValueError):
            enumerate_distribution({1: 0, 2: 0}, c=1, beta=-0.5)


class TestUniformSampler:
    def test_full_deck_degenerate(self):
        bits = BitStream(5)
        first = BitStream(5).next_u64()
        assert sample_subset_uniform(bits, {3, 8, 11}, 3) == {3, 8, 11}
        assert bits.next_u64() == first  # consumed nothing

    def test_c_out_of_range(self):
        with pytest.raises(InvalidSizeError):
            sample_subset_uniform(BitStream(1), {1, 2, 3}, 4)
        with pytest.raises(InvalidSizeError):
            sample_subset_uniform(BitStream(1), {1, 2, 3}, 0)

    def test_single_card_marginal(self):
        # c = 1 over 10 positions: each frequency 0.1 within 3 sigma at 1e6 draws
        bits = BitStream(77)
        n_draws = 1_000_000
        counts = np.zeros(10, dtype=np.int64)
        for _ in range(n_draws):
            counts[uniform_positions(bits, 10, 1)[0]] += 1
        sigma = math.sqrt(n_draws * 0.1 * 0.9)
        assert (np.abs(counts - n_draws * 0.1) < 3.5 * sigma).all()

    def test_subset_frequencies_chisquare(self):
        # all comb(4, 2) = 6 subsets equally likely
        bits = BitStream(123)
        counts = positions_histogram(lambda: uniform_positions(bits, 4, 2), 1_000_000)
        probs = {subset_mask(c, range(4)): 1 / 6 for c in itertools.combinations(range(4), 2)}
        assert pooled_chisquare(counts, probs) > 0.001


class TestTopCSampler:
    def test_clear_ranking_deterministic(self):
        bits = BitStream(9)
        for _ in range(200):
            assert topc_positions(bits, [5, 4, 3, 0], 2) == [0, 1]

    def test_boundary_tie_split(self):
        # confidences (3, 2, 2, 0), c = 2: position 0 always shown, the tied
        # pair each picked about half the time
        bits = BitStream(21)
        hits = np.zeros(4, dtype=np.int64)
        n_draws = 20_000
        for _ in range(n_draws):
            cs = topc_positions(bits, [3, 2, 2, 0], 2)
            assert 0 in cs
            for p in cs:
                hits[p] += 1
        assert hits[0] == n_draws
        assert hits[3] == 0
        sigma = math.sqrt(n_draws * 0.25)
        assert abs(hits[1] - n_draws / 2) < 4 * sigma
        assert abs(hits[2] - n_draws / 2) < 4 * sigma

    def test_all_tied_matches_uniform(self):
        bits = BitStream(31)
        counts = positions_histogram(lambda: topc_positions(bits, [2, 2, 2, 2, 2], 2), 200_000)
        probs = {subset_mask(c, range(5)): 0.1 for c in itertools.combinations(range(5), 2)}
        assert pooled_chisquare(counts, probs) > 0.001

    def test_full_deck_degenerate(self):
        bits = BitStream(5)
        assert sample_subset_top_c(bits, {2: 9, 4: 0, 6: 3}, 3) == {2, 4, 6}


class TestGibbsSampler:
    def test_beta_zero_matches_uniform_distribution(self):
        bits = BitStream(8)
        counts = positions_histogram(lambda: gibbs_positions(bits, [7, 1, 4, 2, 0, 3], 3, 0.0),
                                     200_000)
        probs = {subset_mask(c, range(6)): 1 / 20 for c in itertools.combinations(range(6), 3)}
        assert pooled_chisquare(counts, probs) > 0.001

    def test_matches_enumeration(self):
        # N=5, C=2, F=(4,3,2,1,0), beta=0.7 against the enumeration oracle
        frow = [4, 3, 2, 1, 0]
        conf = {i + 1: f for i, f in enumerate(frow)}
        dist = enumerate_distribution(conf, c=2, beta=0.7)
        probs = {subset_mask(s, conf): p for s, p in dist.entries}
        bits = BitStream(17)
        counts = positions_histogram(lambda: gibbs_positions(bits, frow, 2, 0.7), 200_000)
        assert pooled_chisquare(counts, probs, min_expected=5.0) > 0.001

    def test_large_beta_selects_top_subset(self):
        bits = BitStream(3)
        top = {0, 1}
        hits = sum(set(gibbs_positions(bits, [4, 3, 2, 1, 0], 2, 50.0)) == top
                   for _ in range(20_000))
        assert hits / 20_000 > 0.999

    def test_extreme_range_matches_enumeration(self):
        # beta * range far beyond the linear-domain threshold: the banded
        # pass must still reproduce the exact distribution
        frow = [2000, 5, 3, 0]
        conf = {i + 1: f for i, f in enumerate(frow)}
        dist = enumerate_distribution(conf, c=2, beta=1.0)
        probs = {subset_mask(s, conf): p for s, p in dist.entries}
        bits = BitStream(40)
        counts = positions_histogram(lambda: gibbs_positions(bits, frow, 2, 1.0), 30_000)
        assert pooled_chisquare(counts, probs, min_expected=5.0) > 0.001

    def test_extreme_range_boundary_ties_match_enumeration(self):
        # wide range with several cards inside the boundary band
        frow = [5000, 100, 99, 98, 97, 0]
        conf = {i + 1: f for i, f in enumerate(frow)}
        dist = enumerate_distribution(conf, c=3, beta=2.0)
        probs = {subset_mask(s, conf): p for s, p in dist.entries}
        probs = {m: p for m, p in probs.items() if p > 1e-12}
        bits = BitStream(44)
        counts = positions_histogram(lambda: gibbs_positions(bits, frow, 3, 2.0), 30_000)
        assert pooled_chisquare(counts, probs, min_expected=5.0) > 0.001

    def test_extreme_range_saturated_band_is_deterministic(self):
        # forced cards plus the whole band exactly fill the sample: no
        # randomness left to consume
        bits = BitStream(5)
        first = BitStream(5).next_u64()
        for _ in range(50):
            assert gibbs_positions(bits, [3000, 2000, 1999, 0], 3, 1.0) == [0, 1, 2]
        assert bits.next_u64() == first

    def test_integer_shift_leaves_draws_identical(self):
        # the max-shift cancels an integer shift exactly, so under the same
        # seed the drawn subsets are identical
        frow = [6, 2, 5, 0, 1]
        a = BitStream(55)
        b = BitStream(55)
        for _ in range(500):
            assert gibbs_positions(a, frow, 2, 0.9) == \
                gibbs_positions(b, [f + 7 for f in frow], 2, 0.9)

    def test_log_domain_fallback_matches_enumeration(self):
        # beta * range = 480 stays on the Gibbs path but underflows the
        # linear e-table, forcing the log-domain draw
        frow = [1200, 0, 0, 0, 0]
        conf = {i + 1: f for i, f in enumerate(frow)}
        dist = enumerate_distribution(conf, c=3, beta=0.4)
        probs = {subset_mask(s, conf): p for s, p in dist.entries}
        bits = BitStream(61)
        counts = positions_histogram(lambda: gibbs_positions(bits, frow, 3, 0.4), 30_000)
        assert pooled_chisquare(counts, probs, min_expected=5.0) > 0.001

    def test_full_deck_degenerate(self):
        bits = BitStream(5)
        first = BitStream(5).next_u64()
        assert sample_subset_gibbs(bits, {1: 4, 2: 1, 3: 0}, 3, 1.2) == {1, 2, 3}
        assert bits.next_u64() == first

    def test_inclusion_probability_identity(self):
        # P(card j included) = w_j * e_{C-1}(others) / e_C(all), checked
        # against the enumeration marginals for several (n, c)
        rng = np.random.default_rng(2024)
        for n in range(2, 11):
            frow = rng.integers(0, 6, size=n)
            conf = {i + 1: int(f) for i, f in enumerate(frow)}
            for c in (1, max(1, n // 2), n - 1):
                beta = 0.6
                dist = enumerate_distribution(conf, c=c, beta=beta)
                weights = [math.exp(beta * float(f)) for f in frow]
                e_all = elementary_symmetric(weights, c)
                for j in range(n):
                    others = weights[:j] + weights[j + 1:]
                    want = weights[j] * elementary_symmetric(others, c - 1) / e_all
                    got = sum(p for s, p in dist.entries if (j + 1) in s)
                    assert got == pytest.approx(want, rel=1e-10)

    def test_validation(self):
        with pytest.raises(InvalidSizeError):
            sample_subset_gibbs(BitStream(1), {1: 0, 2: 0}, 3, 0.5)
        with pytest.raises(ValueError):
            sample_subset_gibbs(BitStream(1), {1: 0, 2: 0}, 1, float("nan"))
