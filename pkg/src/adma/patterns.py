"""Landmark-based transformation patterns and the distinctiveness score.

The source task contributes one landmark per class: the instance closest to
its class mean in the final representation. An instance's *relative
representation* at a layer is its vector of squared distances to all landmark
outputs at that layer; the difference of the relative representations at an
early and a late layer is its *transformation pattern*, describing how the
network reshapes the instance's geometry between the two layers.

An observed pattern is compared (by Kendall rank correlation) with the
pattern the source model would be expected to produce, reconstructed as a
weighted combination of the landmarks' own patterns. Low rank agreement means
the instance is transformed unlike anything in the source task; that mismatch,
mapped to [0, 1], is the distinctiveness score.

All functions here are pure and safe to evaluate in parallel per instance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

ALPHA_SUM_TOL = 1e-5


@dataclass(frozen=True)
class CenterSet:
    """Per-class landmark instances: their indices and the class means."""

    indices: np.ndarray
    means: np.ndarray


def _class_members(labels: np.ndarray) -> list[np.ndarray]:
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise ValueError("empty class: no labeled instances")
    K = int(labels.max()) + 1
    members = [np.flatnonzero(labels == k) for k in range(K)]
    for k, m in enumerate(members):
        if m.size == 0:
            raise ValueError(f"empty class: class {k} has no instances")
    return members


def compute_class_means(reps: np.ndarray, labels) -> np.ndarray:
    """Arithmetic mean of the final representations of each class.

    Returns a (K, dim) array; class k's mean is row k.
    """
    reps = np.asarray(reps, dtype=np.float64)
    members = _class_members(np.asarray(labels))
    return np.stack([reps[m].mean(axis=0) for m in members])


def select_centers(reps: np.ndarray, labels) -> CenterSet:
    """Pick each class's landmark: the member closest to the class mean.

    Distance is squared Euclidean; ties resolve to the lowest instance index.
    """
    reps = np.asarray(reps, dtype=np.float64)
    members = _class_members(np.asarray(labels))
    means = np.stack([reps[m].mean(axis=0) for m in members])
    indices = np.empty(len(members), dtype=int)
    for k, m in enumerate(members):
        d2 = ((reps[m] - means[k]) ** 2).sum(axis=1)
        indices[k] = m[int(np.argmin(d2))]  # argmin takes the first minimum
    return CenterSet(indices=indices, means=means)


def relative_representation(v: np.ndarray, landmarks: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from v to every landmark.

    ``v`` may be a single vector (returns shape (K,)) or a batch of rows
    (returns shape (n, K)). The batch form is computed per row from explicit
    differences, so results do not depend on how the batch is chunked.
    """
    v = np.asarray(v, dtype=np.float64)
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if v.shape[-1] != landmarks.shape[1]:
        raise ValueError(
            f"dimension mismatch: vector has {v.shape[-1]} features, "
            f"landmarks have {landmarks.shape[1]}"
        )
    if v.ndim == 1:
        return ((v[None, :] - landmarks) ** 2).sum(axis=1)
    return ((v[:, None, :] - landmarks[None, :, :]) ** 2).sum(axis=2)


def transform_pattern(S_A: np.ndarray, S_B: np.ndarray) -> np.ndarray:
    """Early-minus-late difference of two relative representations."""
    S_A = np.asarray(S_A, dtype=np.float64)
    S_B = np.asarray(S_B, dtype=np.float64)
    if S_A.shape != S_B.shape:
        raise ValueError(f"length mismatch: {S_A.shape} vs {S_B.shape}")
    return S_A - S_B


def center_patterns(centers_early: np.ndarray, centers_late: np.ndarray) -> np.ndarray:
    """Transformation pattern of every landmark, one per row.

    Row k is landmark k's early-to-late pattern with all landmarks (itself
    included, contributing an exact zero at entry k) as reference points.
    """
    S_early = relative_representation(centers_early, centers_early)
    S_late = relative_representation(centers_late, centers_late)
    return transform_pattern(S_early, S_late)


def alpha_predict(source_probs_row: np.ndarray) -> np.ndarray:
    """Combination weights taken from the source model's class probabilities."""
    row = np.asarray(source_probs_row, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError("expected a single probability row")
    if np.any(row < 0) or not np.isfinite(row).all():
        raise ValueError("non-distribution input: negative or non-finite entries")
    s = row.sum()
    if abs(s - 1.0) > ALPHA_SUM_TOL:
        raise ValueError(f"non-distribution input: row sums to {s:.6f}")
    return row / s


def alpha_distance(x_A: np.ndarray, centers_A: np.ndarray) -> np.ndarray:
    """Combination weights proportional to reciprocal L2 distance to each
    landmark's early-layer output.

    An exact landmark match gets all the weight (split uniformly when several
    landmarks match exactly).
    """
    x_A = np.asarray(x_A, dtype=np.float64)
    centers_A = np.asarray(centers_A, dtype=np.float64)
    if x_A.shape[-1] != centers_A.shape[1]:
        raise ValueError(
            f"dimension mismatch: vector has {x_A.shape[-1]} features, "
            f"centers have {centers_A.shape[1]}"
        )
    d = np.sqrt(((x_A[None, :] - centers_A) ** 2).sum(axis=1))
    zero = d == 0.0
    if zero.any():
        w = zero.astype(np.float64)
        return w / w.sum()
    inv = 1.0 / d
    return inv / inv.sum()


def approximate_pattern(alpha: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    """Weighted combination of landmark patterns (one pattern per row)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    patterns = np.asarray(patterns, dtype=np.float64)
    if patterns.ndim != 2 or alpha.shape[0] != patterns.shape[0]:
        raise ValueError(
            f"length mismatch: {alpha.shape[0]} weights vs {patterns.shape[0]} patterns"
        )
    return alpha @ patterns


# ---------------------------------------------------------------------------
# Kendall's tau-b
# ---------------------------------------------------------------------------

def _merge_count(values: np.ndarray) -> int:
    """Count strict inversions (i < j with values[i] > values[j]) by merge sort."""
    vals = values.tolist()
    n = len(vals)
    buf = vals[:]
    inversions = 0
    width = 1
    while width < n:
        lo = 0
        while lo < n:
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j = lo, mid
            for k in range(lo, hi):
                # Take from the left on ties: equal values are not inversions.
                if i < mid and (j >= hi or vals[i] <= vals[j]):
                    buf[k] = vals[i]
                    i += 1
                else:
                    buf[k] = vals[j]
                    j += 1
                    inversions += mid - i
            lo += 2 * width
        vals, buf = buf, vals
        width *= 2
    return inversions


def _tie_pairs(sorted_vals: np.ndarray) -> int:
    """Sum of t*(t-1)/2 over runs of equal values in a sorted array."""
    total = 0
    run = 1
    for i in range(1, len(sorted_vals)):
        if sorted_vals[i] == sorted_vals[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def kendall_tau(u, v) -> float:
    """Kendall's tau-b between two equal-length vectors, in [-1, 1].

    Computed in O(n log n): sort by (u, v), then count discordant pairs as
    merge-sort inversions of v, with tie corrections for both vectors. When
    either vector is entirely tied the coefficient is undefined; that case
    returns 0.0 with a warning.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    n = u.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 entries, got {n}")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValueError("non-finite entries")

    order = np.lexsort((v, u))
    u_s = u[order]
    v_s = v[order]

    n0 = n * (n - 1) // 2
    ties_u = _tie_pairs(u_s)
    ties_v = _tie_pairs(np.sort(v))
    # Pairs tied in both vectors: runs of equal (u, v) in the lexsorted order.
    joint = 0
    run = 1
    for i in range(1, n):
        if u_s[i] == u_s[i - 1] and v_s[i] == v_s[i - 1]:
            run += 1
        else:
            joint += run * (run - 1) // 2
            run = 1
    joint += run * (run - 1) // 2

    if ties_u == n0 or ties_v == n0:
        warnings.warn("kendall_tau undefined for an all-tied vector; returning 0.0",
                      stacklevel=2)
        return 0.0

    discordant = _merge_count(v_s)
    concordant = n0 - ties_u - ties_v + joint - discordant
    tau = (concordant - discordant) / np.sqrt(float(n0 - ties_u) * float(n0 - ties_v))
    return float(min(1.0, max(-1.0, tau)))


def distinctiveness(observed: np.ndarray, approximated: np.ndarray) -> float:
    """Rank mismatch between observed and reconstructed patterns, in [0, 1].

    0 means the ranks agree perfectly (the instance transforms exactly as the
    source model predicts); 1 means the ranks are fully reversed.
    """
    return (1.0 - kendall_tau(observed, approximated)) / 2.0


def distinctiveness_multi(pairs, mode: str = "mean") -> float:
    """Combine distinctiveness over several (observed, approximated) pattern
    pairs, e.g. from two early layers against the same late layer.

    mode="mean" averages the per-pair scores; mode="variance" returns their
    population variance (an alternative reading of multi-pattern disagreement,
    poorly scaled but kept selectable).
    """
    values = [distinctiveness(obs, app) for obs, app in pairs]
    if mode == "mean":
        if not values:
            raise ValueError("need at least 1 pattern pair")
        return float(np.mean(values))
    if mode == "variance":
        if len(values) < 2:
            raise ValueError(f"variance mode needs at least 2 pattern pairs, got {len(values)}")
        return float(np.var(values))
    raise ValueError(f"unknown mode: {mode!r}")
