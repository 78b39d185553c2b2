"""Softmax head: initialization, prediction stability, gradient correctness,
warm-start determinism, and evaluation metrics."""

import numpy as np
import pytest

from adma.data import EmbeddingDataset
from adma.trainer import (
    SoftmaxHead,
    TrainConfig,
    binary_auc,
    evaluate,
    fine_tune,
    init_head,
    load_head,
    loss_and_gradient,
    predict_proba,
    save_head,
)


def finite_difference_gradients(head, X, y, l2, eps=1e-4):
    """Central differences over every W and b entry: the gradient oracle."""

    def loss_at(W, b):
        h = SoftmaxHead(W=W, b=b, seed=0, step_count=0)
        return loss_and_gradient(h, X, y, l2)[0]

    dW = np.zeros_like(head.W)
    for i in range(head.W.shape[0]):
        for j in range(head.W.shape[1]):
            Wp, Wm = head.W.copy(), head.W.copy()
            Wp[i, j] += eps
            Wm[i, j] -= eps
            dW[i, j] = (loss_at(Wp, head.b) - loss_at(Wm, head.b)) / (2 * eps)
    db = np.zeros_like(head.b)
    for i in range(head.b.shape[0]):
        bp, bm = head.b.copy(), head.b.copy()
        bp[i] += eps
        bm[i] -= eps
        db[i] = (loss_at(head.W, bp) - loss_at(head.W, bm)) / (2 * eps)
    return dW, db


def gradient_relative_error(head, X, y, l2):
    _, dW, db = loss_and_gradient(head, X, y, l2)
    fW, fb = finite_difference_gradients(head, X, y, l2)
    analytic = np.concatenate([dW.ravel(), db.ravel()])
    numeric = np.concatenate([fW.ravel(), fb.ravel()])
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-12)
    return np.abs(analytic - numeric).max() / scale


def separable_clusters(n_per=40, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.standard_normal((n_per, 2)) * 0.3 + [4.0, 0.0],
        rng.standard_normal((n_per, 2)) * 0.3 + [-4.0, 0.0],
    ])
    y = np.repeat([0, 1], n_per)
    return X, y


class TestInitHead:
    def test_deterministic_per_seed(self):
        a = init_head(8, 3, seed=5)
        b = init_head(8, 3, seed=5)
        assert np.array_equal(a.W, b.W)
        assert not np.array_equal(a.W, init_head(8, 3, seed=6).W)

    def test_bias_exactly_zero(self):
        assert np.array_equal(init_head(4, 2, seed=0).b, np.zeros(2))

    def test_untrained_heads_average_near_uniform(self):
        # averaged over 100 seeds, predictions approach 1/K per class
        rng = np.random.default_rng(1)
        X = rng.standard_normal((20, 6))
        K = 4
        acc = np.zeros((20, K))
        for seed in range(100):
            acc += predict_proba(init_head(6, K, seed=seed), X)
        acc /= 100
        assert np.abs(acc - 1.0 / K).max() < 0.05

    def test_invalid_dims(self):
        with pytest.raises(ValueError, match="positive"):
            init_head(0, 2, seed=0)


class TestPredictProba:
    def test_zero_head_uniform(self):
        head = SoftmaxHead(W=np.zeros((3, 4)), b=np.zeros(3), seed=0)
        P = predict_proba(head, np.random.default_rng(0).standard_normal((5, 4)))
        assert np.array_equal(P, np.full((5, 3), 1.0 / 3.0))

    def test_extreme_logits_stable(self):
        # logits (1000, 0): no overflow, probability essentially one-hot
        head = SoftmaxHead(W=np.array([[1000.0], [0.0]]), b=np.zeros(2), seed=0)
        P = predict_proba(head, np.array([[1.0]]))
        assert np.isfinite(P).all()
        assert P[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        head = SoftmaxHead(W=rng.standard_normal((5, 7)) * 100, b=rng.standard_normal(5),
                           seed=0)
        P = predict_proba(head, rng.standard_normal((50, 7)) * 100)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-6)
        assert not np.isnan(P).any()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            predict_proba(init_head(4, 2, 0), np.zeros((1, 5)))


class TestFineTune:
    def test_zero_learning_rate_leaves_weights(self):
        head = init_head(3, 2, seed=0)
        X, y = separable_clusters(5)
        out = fine_tune(head, X[:, :2] @ np.ones((2, 3)), y, TrainConfig(learning_rate=0.0))
        assert np.array_equal(out.W, head.W)
        assert np.array_equal(out.b, head.b)

    def test_separable_reaches_full_accuracy(self):
        X, y = separable_clusters()
        head = fine_tune(init_head(2, 2, seed=0), X, y,
                         TrainConfig(learning_rate=0.5, epochs=200, seed=1))
        assert (predict_proba(head, X).argmax(axis=1) == y).mean() == 1.0

    def test_loss_non_increasing_on_separable_fixture(self):
        X, y = separable_clusters()
        cfg = TrainConfig(learning_rate=0.1, epochs=1, seed=3)
        head = init_head(2, 2, seed=0)
        losses = [loss_and_gradient(head, X, y, cfg.l2_penalty)[0]]
        for _ in range(20):
            head = fine_tune(head, X, y, cfg)
            losses.append(loss_and_gradient(head, X, y, cfg.l2_penalty)[0])
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_gradient_matches_finite_differences(self):
        # random 5x8 problem, central differences with eps = 1e-4
        rng = np.random.default_rng(4)
        X = rng.standard_normal((5, 8))
        y = rng.integers(0, 3, size=5)
        head = init_head(8, 3, seed=7)
        assert gradient_relative_error(head, X, y, l2=1e-3) < 1e-4

    def test_bitwise_deterministic(self):
        X, y = separable_clusters(10)
        cfg = TrainConfig(epochs=5, seed=9)
        a = fine_tune(init_head(2, 2, seed=1), X, y, cfg)
        b = fine_tune(init_head(2, 2, seed=1), X, y, cfg)
        assert a.W.tobytes() == b.W.tobytes()
        assert a.b.tobytes() == b.b.tobytes()

    def test_warm_start_continues_shuffle_stream(self):
        X, y = separable_clusters(10)
        head = init_head(2, 2, seed=1)
        full = fine_tune(head, X, y, TrainConfig(epochs=8, seed=2))
        half = fine_tune(head, X, y, TrainConfig(epochs=4, seed=2))
        chained = fine_tune(half, X, y, TrainConfig(epochs=4, seed=2))
        assert chained.step_count == full.step_count == 8
        assert np.array_equal(chained.W, full.W)
        assert np.array_equal(chained.b, full.b)

    def test_errors(self):
        head = init_head(2, 2, seed=0)
        with pytest.raises(ValueError, match="empty training set"):
            fine_tune(head, np.zeros((0, 2)), [], TrainConfig())
        with pytest.raises(ValueError, match="label out of range"):
            fine_tune(head, np.zeros((2, 2)), [0, 5], TrainConfig())
        with pytest.raises(ValueError, match="dimension mismatch"):
            fine_tune(head, np.zeros((2, 3)), [0, 1], TrainConfig())


def auc_pair_oracle(scores, positives):
    """Exhaustive (positive, negative) pair counting, ties worth 1/2."""
    pos = [s for s, p in zip(scores, positives) if p]
    neg = [s for s, p in zip(scores, positives) if not p]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def dataset_from(features, labels, K_target):
    n = len(labels)
    return EmbeddingDataset(
        name="eval",
        layers={"A": np.zeros((n, 1)), "B": np.asarray(features, dtype=float)},
        source_probs=np.full((n, 2), 0.5),
        K_target=K_target,
        labels=np.asarray(labels, dtype=int),
    )


class TestEvaluate:
    def test_perfect_predictor(self):
        X, y = separable_clusters()
        head = fine_tune(init_head(2, 2, seed=0), X, y,
                         TrainConfig(learning_rate=0.5, epochs=200, seed=1))
        acc, auc = evaluate(head, dataset_from(X, y, 2))
        assert acc == 1.0
        assert auc == 1.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(5)
        scores = rng.standard_normal(1000)
        positives = np.arange(1000) % 2 == 0
        assert abs(binary_auc(scores, positives) - 0.5) < 0.05

    def test_matches_pair_oracle_exactly(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            n = int(rng.integers(4, 30))
            scores = np.round(rng.standard_normal(n), 1)  # force ties
            positives = rng.random(n) < 0.5
            if positives.all() or not positives.any():
                continue
            assert binary_auc(scores, positives) == auc_pair_oracle(scores, positives)

    def test_three_class_toy_exact(self):
        feats = np.array([[2.0, 0.0], [1.5, 0.5], [0.0, 2.0],
                          [0.5, 1.5], [-2.0, -2.0], [-1.0, -1.0]])
        labels = [0, 0, 1, 1, 2, 2]
        head = init_head(2, 3, seed=3)
        ds = dataset_from(feats, labels, 3)
        probs = predict_proba(head, feats)
        _, auc = evaluate(head, ds)
        expected = np.mean([
            auc_pair_oracle(probs[:, k], [l == k for l in labels]) for k in range(3)
        ])
        assert auc == expected

    def test_absent_class_skipped_with_warning(self):
        feats = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        labels = [0, 1, 0, 1]  # class 2 absent
        head = init_head(2, 3, seed=0)
        with pytest.warns(UserWarning, match="class 2"):
            acc, auc = evaluate(head, dataset_from(feats, labels, 3))
        assert np.isfinite(auc)

    def test_requires_labels(self):
        ds = dataset_from(np.zeros((2, 2)), [0, 1], 2)
        ds.labels = None
        with pytest.raises(ValueError, match="labels"):
            evaluate(init_head(2, 2, 0), ds)


class TestHeadCheckpoint:
    def test_round_trip_exact_for_float32_heads(self, tmp_path):
        head = init_head(6, 3, seed=8)
        rounded = SoftmaxHead(
            W=head.W.astype(np.float32).astype(np.float64),
            b=head.b.astype(np.float32).astype(np.float64),
            seed=head.seed,
            step_count=17,
        )
        path = save_head(rounded, tmp_path)
        back = load_head(path)
        assert np.array_equal(back.W, rounded.W)
        assert np.array_equal(back.b, rounded.b)
        assert back.seed == 8 and back.step_count == 17
