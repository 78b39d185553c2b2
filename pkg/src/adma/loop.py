"""Batch-mode active adaptation loop: score every unlabeled instance, query
the top batch, fine-tune the head on the answers, and track learning curves.

Every random draw is derived from (seed, purpose, iteration) with fresh
generators, so runs are reproducible bit for bit, resumable from checkpoints,
and independent of scoring parallelism.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Protocol

import numpy as np

from . import patterns, selection
from .data import EmbeddingDataset, SourceSnapshot, as_float32_exact, split_pool
from .selection import BatchSelection, ScoreRecord, records_to_csv
from .trainer import SoftmaxHead, TrainConfig, evaluate, fine_tune, init_head, load_head, predict_proba, save_head

STRATEGIES = ("adma", "adma2", "random", "uncertainty_only", "distinctiveness_only")


class OracleError(RuntimeError):
    """The oracle failed to answer a batch (unknown id, invalid label...)."""


class OracleTimeout(OracleError):
    """The oracle did not answer within its deadline; the iteration aborts."""


class QueryItem(NamedTuple):
    """What the oracle sees for one queried instance."""

    instance_id: int
    item_ref: str
    iteration: int
    score: float
    distinctiveness: float
    uncertainty: float


class Oracle(Protocol):
    def query(self, items: list[QueryItem]) -> dict[int, int]: ...


@dataclass(frozen=True)
class StrategyConfig:
    """Everything that determines a run besides the data itself."""

    strategy: str = "adma"
    alpha_mode: str = "predict"
    layer_pairs: tuple[tuple[str, str], ...] = (("A", "B"),)
    batch_size: int = 10
    budget: int = 100
    lam: float | None = None  # None resolves to 1/T, T = planned iterations
    uncertainty_mode: str = "gini"
    multi_mode: str = "mean"
    seed: int = 0
    train: TrainConfig | None = None
    test_fraction: float = 0.3
    target_accuracy: float | None = None
    cumulative_training: bool = True
    retrain_from_init: bool = False

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {self.strategy!r}")
        if self.alpha_mode not in ("predict", "distance"):
            raise ValueError(f"unknown alpha_mode: {self.alpha_mode!r}")
        if self.uncertainty_mode not in ("gini", "literal"):
            raise ValueError(f"unknown uncertainty_mode: {self.uncertainty_mode!r}")
        if self.multi_mode not in ("mean", "variance"):
            raise ValueError(f"unknown multi_mode: {self.multi_mode!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.budget < self.batch_size:
            raise ValueError(
                f"budget {self.budget} smaller than batch_size {self.batch_size}"
            )
        if self.strategy == "adma2" and len(self.layer_pairs) < 2:
            raise ValueError("adma2 needs at least 2 layer pairs")
        if not self.layer_pairs:
            raise ValueError("need at least one layer pair")
        if self.lam is not None and self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    def resolved_lambda(self) -> float:
        if self.lam is not None:
            return self.lam
        planned = -(-self.budget // self.batch_size)  # ceil division
        return 1.0 / planned

    def resolved_train(self) -> TrainConfig:
        return self.train if self.train is not None else TrainConfig(seed=self.seed)


@dataclass
class PatternCache:
    """Source-side quantities fixed for a whole run: landmark outputs per
    layer and each landmark's transformation pattern per layer pair."""

    centers: dict[str, np.ndarray]
    center_patterns: dict[tuple[str, str], np.ndarray]  # row k = landmark k

    @property
    def K_source(self) -> int:
        return self.centers["A"].shape[0]


@dataclass
class MetricPoint:
    iteration: int
    queries: int
    accuracy: float
    macro_auc: float


@dataclass
class LoopState:
    """Mutable bookkeeping for one active-learning run."""

    t: int
    labeled: list[tuple[int, int]]
    unlabeled: set[int]
    head: SoftmaxHead
    query_log: list[list[ScoreRecord]] = field(default_factory=list)
    metrics: list[MetricPoint] = field(default_factory=list)
    cache: PatternCache | None = None
    suspended: bool = False

    @property
    def queried(self) -> int:
        return len(self.labeled)

    def check_partition(self, pool_size: int) -> None:
        labeled_ids = {i for i, _ in self.labeled}
        if len(labeled_ids) != len(self.labeled):
            raise RuntimeError("an instance appears twice in the labeled set")
        if labeled_ids & self.unlabeled:
            raise RuntimeError("labeled and unlabeled sets overlap")
        if len(labeled_ids) + len(self.unlabeled) != pool_size:
            raise RuntimeError("labeled + unlabeled do not cover the pool")
        if len(self.query_log) != self.t:
            raise RuntimeError("query log length does not match iteration count")


def _round_head(head: SoftmaxHead) -> SoftmaxHead:
    # Heads live at float32 precision between iterations so .f32 checkpoints
    # restore them bit-exactly.
    return SoftmaxHead(
        W=as_float32_exact(head.W),
        b=as_float32_exact(head.b),
        seed=head.seed,
        step_count=head.step_count,
    )


def resolve_centers(snapshot: SourceSnapshot) -> dict[str, np.ndarray]:
    """Landmark outputs per layer: precomputed ones verbatim, otherwise
    selected from the raw source exports (nearest member to each class mean,
    measured on the final representation, layer B unless overridden)."""
    if snapshot.centers is not None:
        return dict(snapshot.centers)
    assert snapshot.raw_layers is not None and snapshot.raw_labels is not None
    final = snapshot.raw_final if snapshot.raw_final is not None else snapshot.raw_layers["B"]
    cs = patterns.select_centers(final, snapshot.raw_labels)
    return {lname: mat[cs.indices] for lname, mat in snapshot.raw_layers.items()}


def initialize(
    dataset: EmbeddingDataset, snapshot: SourceSnapshot, config: StrategyConfig
) -> LoopState:
    """Resolve landmarks, precompute their transformation patterns for every
    configured layer pair, and start from an empty labeled set and a fresh
    randomly initialized head."""
    config.validate()
    if dataset.K_target < 2:
        raise ValueError("need at least 2 target classes")
    centers = resolve_centers(snapshot)
    K = centers["A"].shape[0]
    if K < 2:
        raise ValueError(f"need at least 2 source classes for rank patterns, got {K}")
    if K != dataset.K_source:
        raise ValueError(
            f"snapshot has {K} centers but dataset declares K_source={dataset.K_source}"
        )
    cpat: dict[tuple[str, str], np.ndarray] = {}
    for early, late in config.layer_pairs:
        for lname in (early, late):
            if lname not in centers:
                raise ValueError(f"snapshot lacks centers for layer {lname!r}")
            if lname not in dataset.layers:
                raise ValueError(f"dataset lacks layer {lname!r}")
            if centers[lname].shape[1] != dataset.layers[lname].shape[1]:
                raise ValueError(
                    f"dimension mismatch between centers and dataset at layer {lname!r}"
                )
        cpat[(early, late)] = patterns.center_patterns(centers[early], centers[late])
    head = _round_head(init_head(dataset.dim_B, dataset.K_target, seed=config.seed))
    return LoopState(
        t=0,
        labeled=[],
        unlabeled=set(range(dataset.n_instances)),
        head=head,
        cache=PatternCache(centers=centers, center_patterns=cpat),
    )


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _score_chunk(
    ids: list[int],
    dataset: EmbeddingDataset,
    cache: PatternCache,
    head: SoftmaxHead,
    config: StrategyConfig,
    t: int,
    lam: float,
) -> list[ScoreRecord]:
    idx = np.asarray(ids, dtype=int)
    probs_norm = None
    if config.alpha_mode == "predict":
        probs_norm = dataset.probs_normalized()[idx]

    per_pair: list[tuple[np.ndarray, np.ndarray]] = []  # (observed, approximated)
    for early, late in config.layer_pairs:
        S_early = patterns.relative_representation(
            dataset.layers[early][idx], cache.centers[early]
        )
        S_late = patterns.relative_representation(
            dataset.layers[late][idx], cache.centers[late]
        )
        observed = S_early - S_late
        if config.alpha_mode == "predict":
            alpha = probs_norm
        else:
            alpha = np.stack(
                [
                    patterns.alpha_distance(dataset.layers[early][i], cache.centers[early])
                    for i in ids
                ]
            )
        approximated = alpha @ cache.center_patterns[(early, late)]
        per_pair.append((observed, approximated))

    model_probs = predict_proba(head, dataset.layers["B"][idx])
    K = dataset.K_target

    records = []
    for row, iid in enumerate(ids):
        if len(per_pair) == 1:
            obs, app = per_pair[0]
            d = patterns.distinctiveness(obs[row], app[row])
        else:
            d = patterns.distinctiveness_multi(
                [(obs[row], app[row]) for obs, app in per_pair], mode=config.multi_mode
            )
        u_raw = selection.uncertainty(model_probs[row], mode=config.uncertainty_mode)
        gini_norm = selection.normalize_uncertainty(abs(u_raw), K)
        u_norm = gini_norm if config.uncertainty_mode == "gini" else 1.0 - gini_norm
        records.append(
            ScoreRecord(
                instance_id=int(iid),
                iteration=t,
                distinctiveness=d,
                uncertainty_raw=u_raw,
                uncertainty_norm=u_norm,
                score=selection.score(d, u_norm, t, lam),
            )
        )
    return records


def score_unlabeled(
    state: LoopState,
    dataset: EmbeddingDataset,
    config: StrategyConfig,
    workers: int = 1,
) -> list[ScoreRecord]:
    """Score every unlabeled instance for the current iteration.

    With workers > 1 the pool is scored in id-ordered chunks on a thread
    pool; results are merged back in chunk order, so the output is identical
    for any worker count.
    """
    if state.cache is None:
        raise RuntimeError("state has no pattern cache; call initialize() first")
    ids = sorted(state.unlabeled)
    lam = config.resolved_lambda()
    if workers <= 1 or len(ids) < 2 * workers:
        return _score_chunk(ids, dataset, state.cache, state.head, config, state.t, lam)
    chunks = [list(c) for c in np.array_split(ids, workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _score_chunk, c, dataset, state.cache, state.head, config, state.t, lam
            )
            for c in chunks
            if c
        ]
        merged: list[ScoreRecord] = []
        for f in futures:
            merged.extend(f.result())
    return merged


def select_for_strategy(
    records: list[ScoreRecord], config: StrategyConfig, t: int, b: int
) -> BatchSelection:
    """Apply the configured strategy's ranking to pick the next batch."""
    if config.strategy in ("adma", "adma2"):
        return selection.select_batch(records, b)
    if config.strategy == "uncertainty_only":
        return selection.select_batch(records, b, key=lambda r: r.uncertainty_norm)
    if config.strategy == "distinctiveness_only":
        return selection.select_batch(records, b, key=lambda r: r.distinctiveness)
    if config.strategy == "random":
        ids = sorted(r.instance_id for r in records)
        rng = np.random.default_rng([config.seed, 11, t])
        perm = rng.permutation(len(ids))
        take = min(b, len(ids))
        return BatchSelection(ids=[ids[i] for i in perm[:take]], truncated=len(ids) < b)
    raise ValueError(f"unknown strategy: {config.strategy!r}")


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

class SimulatedOracle:
    """Replays the pool's ground-truth labels instantly."""

    def __init__(self, dataset: EmbeddingDataset):
        if dataset.labels is None:
            raise ValueError("simulated oracle requires dataset labels")
        self._labels = dataset.labels
        self._n = dataset.n_instances

    def query(self, items: list[QueryItem]) -> dict[int, int]:
        answers = {}
        for item in items:
            if not 0 <= item.instance_id < self._n:
                raise OracleError(f"unknown instance id: {item.instance_id}")
            answers[item.instance_id] = int(self._labels[item.instance_id])
        return answers


def simulated_oracle(dataset: EmbeddingDataset) -> SimulatedOracle:
    return SimulatedOracle(dataset)


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------

def run_iteration(
    state: LoopState,
    dataset: EmbeddingDataset,
    oracle: Oracle,
    config: StrategyConfig,
    test: EmbeddingDataset | None = None,
    batch_override: int | None = None,
    workers: int = 1,
) -> LoopState:
    """One pass of score -> select -> query -> fine-tune -> evaluate.

    The oracle call happens before any state mutation, so a failed or timed
    out query leaves the state exactly as it was.
    """
    if not state.unlabeled:
        raise RuntimeError("unlabeled pool is empty")
    b = batch_override if batch_override is not None else config.batch_size
    records = score_unlabeled(state, dataset, config, workers=workers)
    chosen = select_for_strategy(records, config, state.t, b)
    by_id = {r.instance_id: r for r in records}
    items = [
        QueryItem(
            instance_id=i,
            item_ref=(dataset.item_refs[i] if dataset.item_refs else f"instance-{i}"),
            iteration=state.t,
            score=by_id[i].score,
            distinctiveness=by_id[i].distinctiveness,
            uncertainty=by_id[i].uncertainty_norm,
        )
        for i in chosen.ids
    ]

    answers = oracle.query(items)  # may raise; state untouched until here

    missing = [i for i in chosen.ids if i not in answers]
    if missing:
        raise OracleError(f"oracle returned no label for ids {missing}")
    for i in chosen.ids:
        if not 0 <= answers[i] < dataset.K_target:
            raise OracleError(f"oracle label {answers[i]} out of range for id {i}")

    # Commit: from here on the iteration must complete.
    selected_set = set(chosen.ids)
    state.query_log.append(
        [replace(r, selected=r.instance_id in selected_set) for r in records]
    )
    state.labeled.extend((i, answers[i]) for i in chosen.ids)
    state.unlabeled.difference_update(selected_set)

    if config.cumulative_training:
        train_pairs = state.labeled
    else:
        train_pairs = [(i, answers[i]) for i in chosen.ids]
    train_ids = np.asarray([i for i, _ in train_pairs], dtype=int)
    train_labels = np.asarray([l for _, l in train_pairs], dtype=int)
    base_head = (
        _round_head(init_head(dataset.dim_B, dataset.K_target, seed=config.seed))
        if config.retrain_from_init
        else state.head
    )
    state.head = _round_head(
        fine_tune(
            base_head,
            dataset.layers["B"][train_ids],
            train_labels,
            config.resolved_train(),
        )
    )
    state.t += 1

    if test is not None:
        accuracy, macro_auc = evaluate(state.head, test)
    else:
        accuracy, macro_auc = float("nan"), float("nan")
    state.metrics.append(
        MetricPoint(
            iteration=state.t,
            queries=state.queried,
            accuracy=accuracy,
            macro_auc=macro_auc,
        )
    )
    state.check_partition(dataset.n_instances)
    return state


def run(
    dataset: EmbeddingDataset,
    snapshot: SourceSnapshot,
    config: StrategyConfig,
    oracle: Oracle | None = None,
    test: EmbeddingDataset | None = None,
    workers: int = 1,
    out_dir: str | Path | None = None,
    resume_state: LoopState | None = None,
) -> tuple[LoopState, list[MetricPoint]]:
    """Drive the loop until the budget is spent, the pool is empty, or the
    optional target accuracy is reached.

    When ``test`` is omitted and the dataset is labeled, a stratified
    test_fraction split is carved off first and the oracle (if omitted)
    replays the remaining pool's labels. An oracle timeout suspends the run
    cleanly: the state checkpoint (if out_dir is given) resumes later.
    """
    config.validate()
    if test is None:
        if dataset.labels is None:
            raise ValueError("need either an explicit test set or a labeled dataset")
        pool, test = split_pool(dataset, config.test_fraction, config.seed)
    else:
        pool = dataset
    if oracle is None:
        oracle = simulated_oracle(pool)

    if resume_state is not None:
        state = resume_state
        if state.cache is None:
            fresh = initialize(pool, snapshot, config)
            state.cache = fresh.cache
        state.suspended = False
    else:
        state = initialize(pool, snapshot, config)

    if hasattr(oracle, "on_progress"):
        oracle.on_progress(_status_dict(state, config))

    while state.unlabeled and state.queried < config.budget:
        if config.target_accuracy is not None and state.metrics:
            if state.metrics[-1].accuracy >= config.target_accuracy:
                break
        b = min(config.batch_size, config.budget - state.queried, len(state.unlabeled))
        try:
            run_iteration(
                state, pool, oracle, config, test=test, batch_override=b, workers=workers
            )
        except OracleTimeout:
            state.suspended = True
            warnings.warn("oracle timed out; run suspended with resumable state",
                          stacklevel=2)
            break
        if hasattr(oracle, "on_progress"):
            oracle.on_progress(_status_dict(state, config))

    if out_dir is not None:
        export_run(state, config, out_dir)
    return state, list(state.metrics)


def _status_dict(state: LoopState, config: StrategyConfig) -> dict:
    latest = None
    if state.metrics:
        m = state.metrics[-1]
        latest = {"queries": m.queries, "accuracy": m.accuracy, "macro_auc": m.macro_auc}
    return {
        "iteration": state.t,
        "queried": state.queried,
        "budget": config.budget,
        "labeled_count": len(state.labeled),
        "latest_metrics": latest,
    }


# ---------------------------------------------------------------------------
# Export / checkpoint
# ---------------------------------------------------------------------------

CURVE_CSV_HEADER = "iteration,queries,accuracy,macro_auc"


def curve_to_csv(metrics: list[MetricPoint]) -> str:
    lines = [CURVE_CSV_HEADER]
    for m in metrics:
        lines.append(f"{m.iteration},{m.queries},{m.accuracy!r},{m.macro_auc!r}")
    return "\n".join(lines) + "\n"


def export_run(state: LoopState, config: StrategyConfig, out_dir: str | Path) -> None:
    """Write curve.csv, scores.csv, and a resumable checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curve.csv").write_text(curve_to_csv(state.metrics), encoding="utf-8")
    flat = [r for it_records in state.query_log for r in it_records]
    (out / "scores.csv").write_text(records_to_csv(flat), encoding="utf-8")
    save_checkpoint(state, config, out)


def save_checkpoint(state: LoopState, config: StrategyConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_head(state.head, out, prefix="head")
    train = config.resolved_train()
    doc = {
        "version": 1,
        "t": state.t,
        "labeled": [[int(i), int(l)] for i, l in state.labeled],
        "unlabeled": sorted(int(i) for i in state.unlabeled),
        "suspended": state.suspended,
        "head": "head.json",
        "config": {
            "strategy": config.strategy,
            "alpha_mode": config.alpha_mode,
            "layer_pairs": [list(p) for p in config.layer_pairs],
            "batch_size": config.batch_size,
            "budget": config.budget,
            "lam": config.lam,
            "uncertainty_mode": config.uncertainty_mode,
            "multi_mode": config.multi_mode,
            "seed": config.seed,
            "test_fraction": config.test_fraction,
            "target_accuracy": config.target_accuracy,
            "cumulative_training": config.cumulative_training,
            "retrain_from_init": config.retrain_from_init,
            "train": {
                "learning_rate": train.learning_rate,
                "epochs": train.epochs,
                "minibatch_size": train.minibatch_size,
                "l2_penalty": train.l2_penalty,
                "seed": train.seed,
            },
        },
        "metrics": [
            [m.iteration, m.queries, m.accuracy, m.macro_auc] for m in state.metrics
        ],
        "query_log": [
            [
                [
                    r.instance_id,
                    r.iteration,
                    r.distinctiveness,
                    r.uncertainty_raw,
                    r.uncertainty_norm,
                    r.score,
                    int(r.selected),
                ]
                for r in it_records
            ]
            for it_records in state.query_log
        ],
    }
    jpath = out / "checkpoint.json"
    with open(jpath, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return jpath


def load_checkpoint(path: str | Path) -> tuple[LoopState, StrategyConfig]:
    """Restore a saved run. The pattern cache is rebuilt on the next run()."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    head = load_head(path.parent / doc["head"])
    cfg = doc["config"]
    config = StrategyConfig(
        strategy=cfg["strategy"],
        alpha_mode=cfg["alpha_mode"],
        layer_pairs=tuple(tuple(p) for p in cfg["layer_pairs"]),
        batch_size=cfg["batch_size"],
        budget=cfg["budget"],
        lam=cfg["lam"],
        uncertainty_mode=cfg["uncertainty_mode"],
        multi_mode=cfg["multi_mode"],
        seed=cfg["seed"],
        train=TrainConfig(**cfg["train"]),
        test_fraction=cfg["test_fraction"],
        target_accuracy=cfg["target_accuracy"],
        cumulative_training=cfg["cumulative_training"],
        retrain_from_init=cfg["retrain_from_init"],
    )
    state = LoopState(
        t=doc["t"],
        labeled=[(int(i), int(l)) for i, l in doc["labeled"]],
        unlabeled=set(int(i) for i in doc["unlabeled"]),
        head=head,
        query_log=[
            [
                ScoreRecord(
                    instance_id=int(r[0]),
                    iteration=int(r[1]),
                    distinctiveness=float(r[2]),
                    uncertainty_raw=float(r[3]),
                    uncertainty_norm=float(r[4]),
                    score=float(r[5]),
                    selected=bool(r[6]),
                )
                for r in it_records
            ]
            for it_records in doc["query_log"]
        ],
        metrics=[
            MetricPoint(iteration=m[0], queries=m[1], accuracy=m[2], macro_auc=m[3])
            for m in doc["metrics"]
        ],
        suspended=doc.get("suspended", False),
    )
    return state, config
