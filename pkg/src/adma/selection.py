"""Uncertainty, the dynamic trade-off score, and top-b batch selection.

The per-instance selection score blends two [0, 1] criteria: distinctiveness
(representation mismatch against the source task) and normalized prediction
uncertainty of the current classifier. The blend weight grows linearly with
the iteration counter, so early batches chase distinctive instances and late
batches chase uncertain ones.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-5


@dataclass(frozen=True)
class ScoreRecord:
    """Everything scored for one candidate instance in one iteration."""

    instance_id: int
    iteration: int
    distinctiveness: float
    uncertainty_raw: float
    uncertainty_norm: float
    score: float
    selected: bool = False


@dataclass(frozen=True)
class BatchSelection:
    ids: list[int]
    truncated: bool


def uncertainty(probs, mode: str = "gini") -> float:
    """Impurity of a predicted class distribution.

    mode="gini" (default) returns sum(p * (1 - p)), so uncertain predictions
    score high: 0 for a one-hot prediction, 1 - 1/K for a uniform one.
    mode="literal" returns the negated form, under which confident
    predictions score highest; kept selectable for fidelity experiments.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError("probs must be a distribution over at least 2 classes")
    if np.any(p < 0) or not np.isfinite(p).all():
        raise ValueError("non-distribution input: negative or non-finite entries")
    s = p.sum()
    if abs(s - 1.0) > PROB_TOL:
        raise ValueError(f"non-distribution input: sums to {s:.6f}")
    p = p / s
    gini = float((p * (1.0 - p)).sum())
    if mode == "gini":
        return gini
    if mode == "literal":
        return -gini
    raise ValueError(f"unknown mode: {mode!r}")


def normalize_uncertainty(u_gini: float, K_target: int) -> float:
    """Rescale a Gini impurity from [0, 1 - 1/K] onto [0, 1]."""
    if K_target < 2:
        raise ValueError(f"K_target must be >= 2, got {K_target}")
    upper = 1.0 - 1.0 / K_target
    if not -1e-12 <= u_gini <= upper + 1e-12:
        raise ValueError(f"u_gini {u_gini} outside [0, {upper}]")
    return float(min(1.0, max(0.0, u_gini * K_target / (K_target - 1))))


def tradeoff_weight(t: int, lam: float) -> float:
    """Uncertainty weight at iteration t: lambda * t clamped into [0, 1]."""
    if t < 0:
        raise ValueError(f"iteration must be >= 0, got {t}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return min(1.0, lam * t)


def score(distinctiveness: float, uncertainty_norm: float, t: int, lam: float) -> float:
    """Dynamic blend of the two criteria: pure distinctiveness at t=0, pure
    uncertainty once lambda * t reaches 1."""
    if not 0.0 <= distinctiveness <= 1.0:
        raise ValueError(f"distinctiveness {distinctiveness} outside [0, 1]")
    if not 0.0 <= uncertainty_norm <= 1.0:
        raise ValueError(f"uncertainty_norm {uncertainty_norm} outside [0, 1]")
    w = tradeoff_weight(t, lam)
    return (1.0 - w) * distinctiveness + w * uncertainty_norm


def select_batch(records, b: int, key=None) -> BatchSelection:
    """The b instance ids with the largest score, descending.

    Ties break toward the lower instance id. When fewer than b records remain
    the result is the whole pool with ``truncated`` set. ``key`` selects the
    ranking value (default: the combined score), so variant strategies can
    rank by a single criterion without re-scoring.
    """
    records = list(records)
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    if not records:
        raise ValueError("no records to select from")
    ids = [r.instance_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate instance ids in records")
    if key is None:
        key = lambda r: r.score
    ranked = sorted(records, key=lambda r: (-key(r), r.instance_id))
    chosen = ranked[: min(b, len(ranked))]
    return BatchSelection(ids=[r.instance_id for r in chosen], truncated=len(records) < b)


SCORE_CSV_HEADER = (
    "instance_id,iteration,distinctiveness,uncertainty_raw,uncertainty_norm,score,selected"
)


def records_to_csv(records) -> str:
    """Render score records in the documented CSV export layout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORE_CSV_HEADER.split(","))
    for r in records:
        writer.writerow(
            [
                r.instance_id,
                r.iteration,
                repr(r.distinctiveness),
                repr(r.uncertainty_raw),
                repr(r.uncertainty_norm),
                repr(r.score),
                int(r.selected),
            ]
        )
    return buf.getvalue()
