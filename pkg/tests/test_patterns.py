"""Pattern engine: class means, landmark selection, relative representations,
transformation patterns, combination weights, Kendall's tau-b, and the
distinctiveness score."""

import math
import warnings

import numpy as np
import pytest

from adma.patterns import (
    alpha_distance,
    alpha_predict,
    approximate_pattern,
    center_patterns,
    compute_class_means,
    distinctiveness,
    distinctiveness_multi,
    kendall_tau,
    relative_representation,
    select_centers,
    transform_pattern,
)


def tau_pair_oracle(u, v):
    """O(n^2) pair enumeration for tau-b: the independent reference."""
    n = len(u)
    nc = nd = tu = tv = both = 0
    for i in range(n):
        for j in range(i + 1, n):
            du = u[i] - u[j]
            dv = v[i] - v[j]
            if du == 0 and dv == 0:
                both += 1
            elif du == 0:
                tu += 1
            elif dv == 0:
                tv += 1
            elif du * dv > 0:
                nc += 1
            else:
                nd += 1
    n0 = n * (n - 1) // 2
    ties_u = tu + both
    ties_v = tv + both
    if ties_u == n0 or ties_v == n0:
        return 0.0
    return (nc - nd) / np.sqrt(float(n0 - ties_u) * float(n0 - ties_v))


class TestClassMeans:
    def test_singleton_class(self):
        reps = np.array([[3.0, 4.0]])
        means = compute_class_means(reps, [0])
        assert np.array_equal(means, reps)

    def test_two_point_mean(self):
        reps = np.array([[0.0, 0.0], [2.0, 4.0]])
        means = compute_class_means(reps, [0, 0])
        assert np.array_equal(means[0], [1.0, 2.0])

    def test_matches_compensated_summation(self):
        rng = np.random.default_rng(0)
        reps = rng.standard_normal((50, 7)) * 100
        means = compute_class_means(reps, [0] * 50)
        expected = np.array([math.fsum(reps[:, j]) / 50 for j in range(7)])
        np.testing.assert_allclose(means[0], expected, rtol=1e-6)

    def test_empty_class_rejected(self):
        with pytest.raises(ValueError, match="empty class"):
            compute_class_means(np.zeros((2, 2)), [0, 2])  # class 1 missing


class TestSelectCenters:
    def test_singleton_class_is_its_own_center(self):
        cs = select_centers(np.array([[1.0, 2.0]]), [0])
        assert cs.indices[0] == 0

    def test_collinear_exact_minimizer(self):
        reps = np.array([[0.0], [1.0], [2.0]])
        cs = select_centers(reps, [0, 0, 0])
        assert cs.indices[0] == 1
        assert cs.means[0][0] == 1.0

    def test_tie_breaks_to_lowest_index(self):
        # two points equidistant from the mean
        reps = np.array([[0.0], [2.0], [0.0], [2.0]])
        cs = select_centers(reps, [0, 0, 0, 0])
        assert cs.indices[0] == 0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            n, K, d = 100, 4, 6
            labels = rng.integers(0, K, size=n)
            labels[:K] = np.arange(K)  # every class populated
            reps = rng.standard_normal((n, d))
            cs = select_centers(reps, labels)
            for k in range(K):
                members = np.flatnonzero(labels == k)
                mean = reps[members].mean(axis=0)
                best = min(members, key=lambda i: (((reps[i] - mean) ** 2).sum(), i))
                assert cs.indices[k] == best


class TestRelativeRepresentation:
    def test_zero_at_matching_landmark(self):
        lm = np.array([[1.0, 0.0], [0.0, 2.0]])
        rr = relative_representation(np.array([0.0, 2.0]), lm)
        assert rr[1] == 0.0

    def test_hand_example(self):
        lm = np.array([[1.0, 0.0], [0.0, 2.0]])
        rr = relative_representation(np.array([0.0, 0.0]), lm)
        assert np.array_equal(rr, [1.0, 4.0])

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(2)
        v = rng.standard_normal(64)
        lm = rng.standard_normal((5, 64))
        rr = relative_representation(v, lm)
        for k in range(5):
            naive = 0.0
            for j in range(64):
                naive += (v[j] - lm[k, j]) ** 2
            assert abs(rr[k] - naive) <= 1e-5 * abs(naive)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((7, 4))
        lm = rng.standard_normal((3, 4))
        batch = relative_representation(X, lm)
        for i in range(7):
            assert np.array_equal(batch[i], relative_representation(X[i], lm))

    def test_rigid_motion_invariance(self):
        # a shared orthogonal transform plus translation leaves entries alone
        rng = np.random.default_rng(4)
        v = rng.standard_normal(6)
        lm = rng.standard_normal((4, 6))
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        shift = rng.standard_normal(6)
        before = relative_representation(v, lm)
        after = relative_representation(v @ Q + shift, lm @ Q + shift)
        np.testing.assert_allclose(after, before, rtol=1e-5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            relative_representation(np.zeros(3), np.zeros((2, 4)))


class TestTransformPattern:
    def test_identical_layers_zero(self):
        s = np.array([1.0, 2.0])
        assert np.array_equal(transform_pattern(s, s), [0.0, 0.0])

    def test_subtraction(self):
        assert np.array_equal(
            transform_pattern(np.array([3.0, 1.0]), np.array([1.0, 3.0])), [2.0, -2.0]
        )

    def test_center_patterns_diagonal_zero(self):
        rng = np.random.default_rng(5)
        cA = rng.standard_normal((4, 3))
        cB = rng.standard_normal((4, 2))
        pats = center_patterns(cA, cB)
        assert pats.shape == (4, 4)
        assert np.array_equal(np.diag(pats), np.zeros(4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            transform_pattern(np.zeros(2), np.zeros(3))


class TestAlphaPredict:
    def test_one_hot(self):
        assert np.array_equal(alpha_predict([0.0, 1.0, 0.0]), [0.0, 1.0, 0.0])

    def test_uniform(self):
        np.testing.assert_allclose(alpha_predict([0.25] * 4), [0.25] * 4)

    def test_identity_map(self):
        np.testing.assert_allclose(
            alpha_predict([0.5, 0.3, 0.2]), [0.5, 0.3, 0.2], atol=1e-12
        )

    def test_non_distribution_rejected(self):
        with pytest.raises(ValueError, match="non-distribution"):
            alpha_predict([0.5, 0.3])
        with pytest.raises(ValueError, match="non-distribution"):
            alpha_predict([-0.1, 1.1])


class TestAlphaDistance:
    def test_exact_match_one_hot(self):
        centers = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        w = alpha_distance(np.array([2.0, 0.0]), centers)
        assert np.array_equal(w, [0.0, 0.0, 1.0])

    def test_equidistant_uniform(self):
        centers = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        np.testing.assert_allclose(alpha_distance(np.zeros(2), centers), [0.25] * 4)

    def test_reciprocal_weights(self):
        # distances 1 and 2 -> weights 2/3, 1/3
        centers = np.array([[1.0, 0.0], [2.0, 0.0]])
        w = alpha_distance(np.zeros(2), centers)
        np.testing.assert_allclose(w, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(5)
        centers = rng.standard_normal((6, 5))
        perm = rng.permutation(6)
        w = alpha_distance(x, centers)
        wp = alpha_distance(x, centers[perm])
        np.testing.assert_allclose(wp, w[perm], atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            alpha_distance(np.zeros(2), np.zeros((3, 4)))


class TestApproximatePattern:
    def test_one_hot_selects_pattern(self):
        pats = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        assert np.array_equal(approximate_pattern([0.0, 1.0, 0.0], pats), [3.0, 4.0])

    def test_zero_patterns(self):
        assert np.array_equal(
            approximate_pattern([0.5, 0.5], np.zeros((2, 3))), np.zeros(3)
        )

    def test_matches_scalar_accumulation(self):
        rng = np.random.default_rng(7)
        alpha = rng.random(5)
        alpha /= alpha.sum()
        pats = rng.standard_normal((5, 5))
        got = approximate_pattern(alpha, pats)
        for j in range(5):
            naive = 0.0
            for k in range(5):
                naive += alpha[k] * pats[k, j]
            assert abs(got[j] - naive) <= 1e-6

    def test_linear_in_alpha(self):
        rng = np.random.default_rng(8)
        a, b = rng.random(4), rng.random(4)
        a /= a.sum()
        b /= b.sum()
        pats = rng.standard_normal((4, 4))
        beta = 0.3
        mixed = approximate_pattern(beta * a + (1 - beta) * b, pats)
        combo = beta * approximate_pattern(a, pats) + (1 - beta) * approximate_pattern(b, pats)
        np.testing.assert_allclose(mixed, combo, atol=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            approximate_pattern([1.0], np.zeros((2, 2)))


class TestKendallTau:
    def test_perfect_concordance(self):
        assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0

    def test_perfect_discordance(self):
        assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_worked_example_two_thirds(self):
        # pairs: 5 concordant, 1 discordant -> (5-1)/6
        assert abs(kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) - 2.0 / 3.0) < 1e-15

    def test_symmetry(self):
        rng = np.random.default_rng(9)
        u = rng.standard_normal(37)
        v = rng.standard_normal(37)
        assert kendall_tau(u, v) == kendall_tau(v, u)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(10)
        u = rng.standard_normal(25)
        v = rng.standard_normal(25)
        base = kendall_tau(u, v)
        assert kendall_tau(np.exp(u), v) == pytest.approx(base, abs=1e-15)
        assert kendall_tau(-u, v) == pytest.approx(-base, abs=1e-15)

    def test_matches_pair_oracle_with_ties(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            n = int(rng.integers(2, 60))
            u = rng.integers(0, 6, size=n).astype(float)  # heavy ties
            v = rng.standard_normal(n)
            v[rng.random(n) < 0.3] = 0.0  # injected ties
            expected = tau_pair_oracle(u.tolist(), v.tolist())
            if np.all(u == u[0]):
                with pytest.warns(UserWarning):
                    got = kendall_tau(u, v)
            else:
                got = kendall_tau(u, v)
            assert abs(got - expected) <= 1e-12

    def test_all_tied_returns_zero_with_warning(self):
        with pytest.warns(UserWarning, match="all-tied"):
            assert kendall_tau([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) == 0.0

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least 2"):
            kendall_tau([1.0], [2.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            kendall_tau([1.0, 2.0], [1.0, 2.0, 3.0])


class TestDistinctiveness:
    def test_identical_patterns_zero(self):
        p = np.array([1.0, 2.0, 3.0])
        assert distinctiveness(p, p) == 0.0

    def test_reversed_rankings_one(self):
        assert distinctiveness(np.array([1.0, 2.0, 3.0]), np.array([3.0, 2.0, 1.0])) == 1.0

    def test_worked_example_one_sixth(self):
        # tau = 2/3 -> (1 - 2/3)/2 = 1/6
        got = distinctiveness(np.array([1.0, 2, 3, 4]), np.array([1.0, 3, 2, 4]))
        assert abs(got - 1.0 / 6.0) < 1e-15

    def test_bounds_random(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(2, 20))
            d = distinctiveness(rng.standard_normal(n), rng.standard_normal(n))
            assert 0.0 <= d <= 1.0


class TestDistinctivenessMulti:
    def test_identical_pairs_mean(self):
        obs = np.array([1.0, 2.0, 3.0])
        app = np.array([1.0, 3.0, 2.0])
        single = distinctiveness(obs, app)
        assert distinctiveness_multi([(obs, app), (obs, app)]) == single

    def test_mean_of_extremes(self):
        up = np.array([1.0, 2.0, 3.0])
        down = np.array([3.0, 2.0, 1.0])
        got = distinctiveness_multi([(up, up), (up, down)], mode="mean")
        assert got == 0.5

    def test_variance_mode(self):
        # per-pair scores 0.2 and 0.4 -> population variance 0.01. Length-5
        # patterns: 2 of 10 pairs discordant gives tau 0.6 (score 0.2), and
        # 4 of 10 gives tau 0.2 (score 0.4); inversions counted by hand.
        base = np.arange(5.0)
        two_inversions = np.array([0.0, 2.0, 1.0, 4.0, 3.0])
        four_inversions = np.array([2.0, 1.0, 0.0, 4.0, 3.0])
        assert distinctiveness(base, two_inversions) == pytest.approx(0.2, abs=1e-15)
        assert distinctiveness(base, four_inversions) == pytest.approx(0.4, abs=1e-15)
        got = distinctiveness_multi(
            [(base, two_inversions), (base, four_inversions)], mode="variance"
        )
        assert got == pytest.approx(0.01, abs=1e-12)

    def test_variance_needs_two_pairs(self):
        p = (np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="at least 2"):
            distinctiveness_multi([p], mode="variance")

    def test_unknown_mode(self):
        p = (np.array([1.0, 2.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="unknown mode"):
            distinctiveness_multi([p, p], mode="median")
