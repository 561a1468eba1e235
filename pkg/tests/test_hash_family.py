import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hmbtrain.hash_family import (
    BucketPartition,
    PolynomialHash,
    collision_stats,
    evaluate_block,
    next_prime,
    partition,
    sample_coefficient_block,
    sample_hash,
)


def enumerate_pair_family(p, buckets, x1, x2):
    """Exhaustive oracle over the full degree-1 family (a_1 != 0)."""
    cells = np.zeros((buckets, buckets))
    for a0 in range(p):
        for a1 in range(1, p):
            r1 = (a0 + a1 * x1) % p % buckets
            r2 = (a0 + a1 * x2) % p % buckets
            cells[r1, r2] += 1
    return cells / (p * (p - 1))


def test_next_prime():
    assert next_prime(2) == 2
    assert next_prime(16) == 17
    assert next_prime(17) == 17
    assert next_prime(104) == 107
    assert next_prime(1600) == 1601


class TestSampleHash:
    def test_field_prime_is_smallest(self, rng):
        h = sample_hash(rng, 2, 104, 16)
        assert h.prime == 107
        assert h.universe == 104

    def test_rejection_never_constant(self, rng):
        for _ in range(500):
            h = sample_hash(rng, 3, 5, 4)
            assert any(a != 0 for a in h.coeffs[1:])

    def test_family_size_matches_rejection_rule(self):
        # degree-1 maps over a 17-element field: 17*16 distinct coefficient
        # pairs survive the nonzero-slope rule
        p = 17
        family = [(a0, a1) for a0 in range(p) for a1 in range(p) if a1 != 0]
        assert len(family) == p**2 - p

    def test_coefficient_marginal_uniformity(self):
        rng = np.random.default_rng(77)
        p = 17
        coeffs = sample_coefficient_block(rng, 2, p, 100_000)
        counts0 = np.bincount(coeffs[:, 0], minlength=p)
        assert stats.chisquare(counts0).pvalue > 0.001
        counts1 = np.bincount(coeffs[:, 1], minlength=p)[1:]  # slope uniform over [1, p)
        assert stats.chisquare(counts1).pvalue > 0.001

    def test_determinism(self):
        a = sample_hash(np.random.default_rng(5), 2, 64, 8)
        b = sample_hash(np.random.default_rng(5), 2, 64, 8)
        assert a == b
        assert partition(a, 64, 8).buckets == partition(b, 64, 8).buckets


class TestEvaluate:
    def test_hand_worked_example(self):
        h = PolynomialHash(coeffs=(3, 5), prime=17, buckets=4, universe=17)
        # (3 + 5*7) mod 17 = 4, then 4 mod 4 = 0
        assert h.evaluate(7) == 0

    def test_rotation_when_buckets_equal_field(self):
        h = PolynomialHash(coeffs=(5, 1), prime=17, buckets=17, universe=17)
        assert [h(x) for x in range(17)] == [(5 + x) % 17 for x in range(17)]

    @given(st.integers(0, 63), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_output_range(self, x, seed):
        h = sample_hash(np.random.default_rng(seed), 3, 64, 7)
        assert 0 <= h.evaluate(x) < 7

    def test_same_key_always_collides(self, rng):
        h = sample_hash(rng, 2, 64, 8)
        assert all(h(x) == h(x) for x in range(64))

    def test_domain_error(self, rng):
        h = sample_hash(rng, 2, 64, 8)
        with pytest.raises(ValueError):
            h.evaluate(64)

    def test_constant_polynomial_rejected_on_construction(self):
        with pytest.raises(ValueError):
            PolynomialHash(coeffs=(3, 0, 0), prime=17, buckets=4, universe=16)

    def test_vectorized_matches_scalar(self, rng):
        h = sample_hash(rng, 4, 200, 13)
        keys = rng.integers(0, 200, size=50)
        assert np.array_equal(h.evaluate_all(keys), [h.evaluate(int(x)) for x in keys])

    def test_block_evaluation_matches_scalar(self, rng):
        p = 67
        coeffs = sample_coefficient_block(rng, 3, p, 20)
        keys = rng.integers(0, 64, size=20)
        got = evaluate_block(coeffs, keys, p, 8)
        for i in range(20):
            h = PolynomialHash(coeffs=tuple(int(c) for c in coeffs[i]), prime=p, buckets=8, universe=64)
            assert got[i] == h.evaluate(int(keys[i]))


class TestPartition:
    def test_balanced_sixteen_into_four(self, rng):
        h = sample_hash(rng, 2, 16, 4)
        part = partition(h, 16, 4, mode="balanced")
        assert all(len(b) == 4 for b in part.buckets)

    @given(st.integers(0, 2**32 - 1), st.integers(5, 60), st.integers(2, 8))
    @settings(max_examples=100, deadline=None)
    def test_partition_laws(self, seed, universe, buckets):
        buckets = min(buckets, universe)
        rng = np.random.default_rng(seed)
        h = sample_hash(rng, 2, universe, buckets)
        for mode in ("raw", "balanced"):
            part = partition(h, universe, buckets, mode=mode)
            everything = sorted(itertools.chain.from_iterable(part.buckets))
            assert everything == list(range(universe))  # disjoint and complete
            if mode == "balanced":
                sizes = {len(b) for b in part.buckets}
                assert sizes <= {universe // buckets, math.ceil(universe / buckets)}

    def test_raw_sizes_sum(self, rng):
        h = sample_hash(rng, 2, 104, 16)
        part = partition(h, 104, 16, mode="raw")
        assert sum(len(b) for b in part.buckets) == 104

    def test_minimal_moves_when_divisible(self):
        # with B | N_C the reassignment count equals the total cap overflow
        for seed in range(40):
            rng = np.random.default_rng(seed)
            h = sample_hash(rng, 2, 48, 6)
            raw = partition(h, 48, 6, mode="raw")
            expected = sum(max(0, len(b) - 8) for b in raw.buckets)
            bal = partition(h, 48, 6, mode="balanced")
            assert bal.moved == expected

    def test_raw_matches_hash_values(self, rng):
        h = sample_hash(rng, 2, 30, 5)
        part = partition(h, 30, 5, mode="raw")
        for b, members in enumerate(part.buckets):
            assert all(h(x) == b for x in members)

    def test_text_export(self, tmp_path, rng):
        from hmbtrain.hash_family import save_partition

        h = sample_hash(rng, 2, 16, 4)
        part = partition(h, 16, 4)
        path = tmp_path / "partition.txt"
        save_partition(part, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 4
        parsed = {
            int(line.split(":")[0]): [int(v) for v in line.split(":")[1].split(",")]
            for line in lines
        }
        assert parsed == {b: list(m) for b, m in enumerate(part.buckets)}

    def test_bucket_of_inverts_partition(self, rng):
        h = sample_hash(rng, 2, 40, 8)
        part = partition(h, 40, 8)
        inverse = part.bucket_of()
        for b, members in enumerate(part.buckets):
            assert all(inverse[x] == b for x in members)


class TestIndependenceLaws:
    def test_pairwise_cells_within_bias_bound(self):
        # exhaustive over the whole family: every joint cell within the
        # documented (p mod B)/p of 1/B^2
        p, buckets = 17, 4
        bound = (p % buckets) / p
        cells = enumerate_pair_family(p, buckets, 3, 11)
        assert np.max(np.abs(cells - 1 / buckets**2)) <= bound

    def test_pairwise_collision_all_pairs(self):
        p, buckets = 17, 4
        bound = (p % buckets) / p
        for x1 in range(p):
            for x2 in range(x1 + 1, p):
                cells = enumerate_pair_family(p, buckets, x1, x2)
                collision = np.trace(cells)
                assert abs(collision - 1 / buckets) <= bound

    def test_monte_carlo_pairwise_matches_enumeration(self):
        rng = np.random.default_rng(2024)
        universe, buckets = 64, 8
        stats_out = collision_stats(2, universe, buckets, 2, 100_000, rng)
        exact = np.trace(enumerate_pair_family(67, buckets, 3, 11))
        sigma = math.sqrt(exact * (1 - exact) / stats_out["trials"])
        assert abs(stats_out["pairwise"] - exact) <= 3 * sigma
        assert abs(exact - 1 / buckets) <= stats_out["bias_bound"]

    @pytest.mark.parametrize("buckets", [4, 8, 16])
    def test_pairwise_collision_bias_bounded(self, buckets):
        rng = np.random.default_rng(buckets)
        out = collision_stats(2, 64, buckets, 2, 100_000, rng)
        sigma = math.sqrt(out["pairwise_target"] * (1 - out["pairwise_target"]) / out["trials"])
        assert abs(out["pairwise"] - 1 / buckets) <= 3 * sigma + out["bias_bound"]

    def test_joint_target_arithmetic(self):
        rng = np.random.default_rng(0)
        out = collision_stats(2, 64, 4, 2, 10_000, rng)
        assert out["joint_target"] == pytest.approx(1 / 16)

    def test_cross_ap_collision(self):
        rng = np.random.default_rng(5)
        out = collision_stats(2, 64, 4, 2, 100_000, rng)
        # independent keys, independent hashes: same-bucket rate near 1/B,
        # both-in-one-designated-slot rate near 1/B^2
        sig_b = math.sqrt((1 / 4) * (3 / 4) / out["trials"])
        assert abs(out["cross_ap"] - 1 / 4) <= 3 * sig_b + 2 * out["bias_bound"]
        sig_s = math.sqrt((1 / 16) * (15 / 16) / out["trials"])
        assert abs(out["cross_ap_slot"] - 1 / 16) <= 3 * sig_s + 2 * out["bias_bound"]

    def test_trials_floor(self, rng):
        with pytest.raises(ValueError):
            collision_stats(2, 64, 4, 2, 100, rng)
