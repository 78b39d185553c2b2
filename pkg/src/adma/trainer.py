"""The fine-tuning surrogate: a softmax classifier head over late-layer
features, trained by seeded minibatch gradient descent and warm-started
across query iterations, plus accuracy and macro one-vs-rest AUC metrics.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import EmbeddingDataset, MatrixRef, read_matrix, write_matrix


@dataclass(frozen=True)
class SoftmaxHead:
    """Trainable last layer: class logits are W @ x + b over late features.

    ``step_count`` tracks completed training epochs so the shuffling stream
    continues deterministically across warm starts.
    """

    W: np.ndarray
    b: np.ndarray
    seed: int
    step_count: int = 0

    @property
    def K_target(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 30
    minibatch_size: int = 16
    l2_penalty: float = 1e-4
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs <= 0 or self.minibatch_size <= 0:
            raise ValueError("epochs and minibatch_size must be positive")
        if self.l2_penalty < 0:
            raise ValueError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


def init_head(dim_B: int, K_target: int, seed: int) -> SoftmaxHead:
    """Fresh head: W ~ N(0, 1/dim_B), b = 0, deterministic per seed."""
    if dim_B <= 0 or K_target <= 0:
        raise ValueError(f"dims must be positive, got dim_B={dim_B}, K_target={K_target}")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((K_target, dim_B)) / np.sqrt(dim_B)
    return SoftmaxHead(W=W, b=np.zeros(K_target), seed=seed, step_count=0)


def predict_proba(head: SoftmaxHead, features: np.ndarray) -> np.ndarray:
    """Row-wise softmax of W @ x + b, max-subtracted for overflow safety."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != head.dim:
        raise ValueError(
            f"dimension mismatch: features have {X.shape[1]} columns, head expects {head.dim}"
        )
    logits = X @ head.W.T + head.b
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(labels: np.ndarray, K: int) -> np.ndarray:
    Y = np.zeros((labels.shape[0], K))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


def loss_and_gradient(
    head: SoftmaxHead, X: np.ndarray, labels: np.ndarray, l2_penalty: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus L2 on W, with its analytic gradient.

    Returns (loss, dW, db). The bias is not penalized.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    m = X.shape[0]
    P = predict_proba(head, X)
    picked = np.clip(P[np.arange(m), labels], 1e-300, None)
    loss = float(-np.log(picked).mean() + 0.5 * l2_penalty * (head.W ** 2).sum())
    R = P - _one_hot(labels, head.K_target)
    dW = R.T @ X / m + l2_penalty * head.W
    db = R.mean(axis=0)
    return loss, dW, db


def _epoch_rng(config_seed: int, step_count: int) -> np.random.Generator:
    # Stream is keyed by (seed, epoch index) so warm starts continue it.
    return np.random.default_rng([int(config_seed), 7919, int(step_count)])


def fine_tune(
    head: SoftmaxHead, features: np.ndarray, labels, config: TrainConfig
) -> SoftmaxHead:
    """Run seeded-shuffled minibatch gradient descent, warm-starting from the
    given head, and return the updated head.

    Each epoch reshuffles with a generator derived from (config.seed,
    head.step_count + epoch), which makes N epochs followed by N more
    bitwise-identical to 2N epochs in one call.
    """
    config.validate()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows vs {y.shape[0]} labels")
    if X.shape[1] != head.dim:
        raise ValueError(
            f"dimension mismatch: features have {X.shape[1]} columns, head expects {head.dim}"
        )
    if np.any(y < 0) or np.any(y >= head.K_target):
        raise ValueError("label out of range")

    W = head.W.copy()
    b = head.b.copy()
    step = head.step_count
    n = X.shape[0]
    for _ in range(config.epochs):
        perm = _epoch_rng(config.seed, step).permutation(n)
        for lo in range(0, n, config.minibatch_size):
            idx = perm[lo : lo + config.minibatch_size]
            cur = SoftmaxHead(W=W, b=b, seed=head.seed, step_count=step)
            _, dW, db = loss_and_gradient(cur, X[idx], y[idx], config.l2_penalty)
            W = W - config.learning_rate * dW
            b = b - config.learning_rate * db
        step += 1
    return SoftmaxHead(W=W, b=b, seed=head.seed, step_count=step)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    s = scores[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def binary_auc(scores: np.ndarray, positives: np.ndarray) -> float:
    """ROC area for one class: rank statistic with ties counted half."""
    n_pos = int(positives.sum())
    n_neg = positives.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined without both positives and negatives")
    ranks = _average_ranks(np.asarray(scores, dtype=np.float64))
    pos_rank_sum = float(ranks[positives].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(head: SoftmaxHead, test: EmbeddingDataset) -> tuple[float, float]:
    """Accuracy and macro one-vs-rest AUC of the head on a labeled test set.

    Argmax ties resolve to the lowest class index. Classes without both a
    positive and a negative test instance are skipped from the macro average
    with a warning; the AUC is NaN if no class qualifies.
    """
    if test.labels is None:
        raise ValueError("evaluate requires test labels")
    probs = predict_proba(head, test.layers["B"])
    pred = probs.argmax(axis=1)
    accuracy = float((pred == test.labels).mean())

    aucs = []
    for k in range(head.K_target):
        positives = test.labels == k
        n_pos = int(positives.sum())
        if n_pos == 0 or n_pos == test.n_instances:
            warnings.warn(
                f"class {k} lacks positives or negatives in the test set; "
                "skipped from macro AUC",
                stacklevel=2,
            )
            continue
        aucs.append(binary_auc(probs[:, k], positives))
    macro_auc = float(np.mean(aucs)) if aucs else float("nan")
    return accuracy, macro_auc


# ---------------------------------------------------------------------------
# Head checkpoints
# ---------------------------------------------------------------------------

def save_head(head: SoftmaxHead, out_dir: str | Path, prefix: str = "head") -> Path:
    """Write W and b as .f32 matrices plus a JSON metadata file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wref = write_matrix(out / f"{prefix}_W.f32", head.W)
    bref = write_matrix(out / f"{prefix}_b.f32", head.b.reshape(1, -1))
    doc = {
        "seed": head.seed,
        "step_count": head.step_count,
        "K_target": head.K_target,
        "dim_B": head.dim,
        "W": wref.to_json(),
        "b": bref.to_json(),
    }
    jpath = out / f"{prefix}.json"
    with open(jpath, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return jpath


def load_head(path: str | Path) -> SoftmaxHead:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = path.parent
    wref = MatrixRef.from_json(doc["W"], "W")
    bref = MatrixRef.from_json(doc["b"], "b")
    W = read_matrix(base / wref.path, wref.rows, wref.cols, "W")
    b = read_matrix(base / bref.path, bref.rows, bref.cols, "b").ravel()
    return SoftmaxHead(W=W, b=b, seed=int(doc["seed"]), step_count=int(doc["step_count"]))
