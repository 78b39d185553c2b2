"""Datasets of precomputed embeddings: on-disk format, validation, splitting,
and a synthetic transfer-task generator.

A dataset replaces live network inference with three exported matrices per
instance pool: the activations at an early layer ("A"), the activations at a
late layer ("B"), and the source model's class probabilities. Matrices live in
headerless ``.f32`` files (raw little-endian float32, row-major) referenced
from a JSON manifest, so any training framework can produce them.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

PROB_ROW_TOL = 1e-5


class DatasetError(ValueError):
    """Raised when a manifest, matrix file, or dataset invariant is invalid."""


@dataclass(frozen=True)
class MatrixRef:
    """Reference to a raw float32 matrix file (little-endian, row-major)."""

    path: str
    rows: int
    cols: int

    def to_json(self) -> dict:
        return {"path": self.path, "rows": self.rows, "cols": self.cols}

    @classmethod
    def from_json(cls, raw: dict, name: str) -> "MatrixRef":
        try:
            return cls(path=str(raw["path"]), rows=int(raw["rows"]), cols=int(raw["cols"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"bad matrix reference for {name}: {raw!r}") from exc


def read_matrix(path: Path, rows: int, cols: int, name: str) -> np.ndarray:
    """Read a ``.f32`` matrix, checking byte length and finiteness.

    Returns float64 (an exact widening of the stored float32 bits).
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing file: {path} (matrix {name})")
    expected = rows * cols * 4
    actual = path.stat().st_size
    if actual != expected:
        raise DatasetError(
            f"shape mismatch: matrix {name} declares {rows}x{cols} "
            f"({expected} bytes) but {path} holds {actual} bytes"
        )
    flat = np.fromfile(path, dtype="<f4")
    mat = flat.reshape(rows, cols) if cols > 0 else flat.reshape(rows, 0)
    bad = ~np.isfinite(mat)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DatasetError(f"non-finite value in matrix {name} at ({i}, {j})")
    return mat.astype(np.float64)


def write_matrix(path: Path, mat: np.ndarray) -> MatrixRef:
    """Write a matrix as raw little-endian float32, row-major."""
    path = Path(path)
    arr = np.ascontiguousarray(mat, dtype="<f4")
    arr.tofile(path)
    return MatrixRef(path=path.name, rows=arr.shape[0], cols=arr.shape[1])


def as_float32_exact(mat: np.ndarray) -> np.ndarray:
    """Round to float32 precision but keep float64 storage.

    Generated datasets pass through this so that in-memory values equal the
    on-disk bits and write/load round-trips are exact.
    """
    return np.asarray(mat, dtype=np.float32).astype(np.float64)


@dataclass
class EmbeddingDataset:
    """An instance pool: per-instance layer activations plus source-model
    probabilities, with optional ground-truth labels and display strings.

    ``layers`` always contains "A" and "B"; extra early layers (for
    multi-pattern scoring) appear under their own names, e.g. "A2".
    Treat instances of this class as immutable; they are shared freely
    across threads.
    """

    name: str
    layers: dict[str, np.ndarray]
    source_probs: np.ndarray
    K_target: int
    labels: np.ndarray | None = None
    item_refs: list[str] | None = None
    class_names: list[str] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_instances(self) -> int:
        return self.layers["A"].shape[0]

    @property
    def dim_A(self) -> int:
        return self.layers["A"].shape[1]

    @property
    def dim_B(self) -> int:
        return self.layers["B"].shape[1]

    @property
    def K_source(self) -> int:
        return self.source_probs.shape[1]

    def validate(self) -> None:
        n = self.n_instances
        if n == 0:
            raise DatasetError(f"empty dataset: {self.name}")
        for lname, mat in self.layers.items():
            if mat.ndim != 2 or mat.shape[0] != n:
                raise DatasetError(
                    f"shape mismatch: layer {lname} has shape {mat.shape}, expected ({n}, *)"
                )
        if self.source_probs.shape[0] != n:
            raise DatasetError(
                f"shape mismatch: source_probs has {self.source_probs.shape[0]} rows, expected {n}"
            )
        if np.any(self.source_probs < 0):
            i, j = np.argwhere(self.source_probs < 0)[0]
            raise DatasetError(f"negative probability in source_probs at ({i}, {j})")
        sums = self.source_probs.sum(axis=1)
        off = np.abs(sums - 1.0) > PROB_ROW_TOL
        if off.any():
            i = int(np.argmax(off))
            raise DatasetError(
                f"row not normalized: source_probs row {i} sums to {sums[i]:.6f}"
            )
        if self.labels is not None:
            if len(self.labels) != n:
                raise DatasetError(
                    f"labels length {len(self.labels)} does not match n_instances {n}"
                )
            if np.any(self.labels < 0) or np.any(self.labels >= self.K_target):
                bad = int(np.argmax((self.labels < 0) | (self.labels >= self.K_target)))
                raise DatasetError(
                    f"label out of range at index {bad}: {self.labels[bad]} "
                    f"not in [0, {self.K_target})"
                )
        if self.item_refs is not None and len(self.item_refs) != n:
            raise DatasetError("item_refs length does not match n_instances")
        if self.class_names is not None and len(self.class_names) != self.K_target:
            raise DatasetError("class_names length does not match K_target")

    def probs_normalized(self) -> np.ndarray:
        """Source probability rows renormalized to sum exactly to 1.

        Stored rows keep the file bits verbatim (they may be off by up to
        1e-5 from float32 rounding); consumers that need true distributions
        use this view.
        """
        sums = self.source_probs.sum(axis=1, keepdims=True)
        return self.source_probs / sums

    def subset(self, indices: np.ndarray, name: str | None = None) -> "EmbeddingDataset":
        """New re-indexed dataset holding the given rows (copy)."""
        idx = np.asarray(indices, dtype=int)
        return EmbeddingDataset(
            name=name or self.name,
            layers={k: v[idx].copy() for k, v in self.layers.items()},
            source_probs=self.source_probs[idx].copy(),
            K_target=self.K_target,
            labels=None if self.labels is None else self.labels[idx].copy(),
            item_refs=None if self.item_refs is None else [self.item_refs[i] for i in idx],
            class_names=self.class_names,
            meta=dict(self.meta),
        )


@dataclass
class SourceSnapshot:
    """Per-class landmark outputs of the source model.

    Either ``centers`` holds the K_source landmark activations per layer
    (precomputed form), or ``raw_layers``/``raw_labels`` hold full source
    instance exports from which the landmarks are resolved at loop
    initialization. ``raw_final`` optionally names the representation used
    for landmark selection; layer "B" is the default.
    """

    centers: dict[str, np.ndarray] | None = None
    center_ids: list | None = None
    raw_layers: dict[str, np.ndarray] | None = None
    raw_labels: np.ndarray | None = None
    raw_final: np.ndarray | None = None

    @property
    def K_source(self) -> int:
        if self.centers is not None:
            return self.centers["A"].shape[0]
        assert self.raw_labels is not None
        return int(self.raw_labels.max()) + 1

    def validate(self) -> None:
        if self.centers is not None:
            k = self.centers["A"].shape[0]
            for lname, mat in self.centers.items():
                if mat.shape[0] != k:
                    raise DatasetError(
                        f"shape mismatch: centers for layer {lname} have {mat.shape[0]} rows, "
                        f"expected {k}"
                    )
        elif self.raw_layers is not None:
            if self.raw_labels is None:
                raise DatasetError("raw source snapshot needs source_labels")
            n = self.raw_layers["A"].shape[0]
            for lname, mat in self.raw_layers.items():
                if mat.shape[0] != n:
                    raise DatasetError(f"shape mismatch: source layer {lname}")
            if len(self.raw_labels) != n:
                raise DatasetError("source_labels length does not match source matrices")
        else:
            raise DatasetError("snapshot holds neither centers nor raw source matrices")


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------

def load_manifest(path: str | Path) -> EmbeddingDataset:
    """Load and fully validate a dataset manifest.

    The manifest is UTF-8 JSON with fields: name, n_instances, dim_A, dim_B,
    K_source, K_target, layer_A, layer_B, source_probs (matrix references),
    and optional labels, item_refs, class_names, extra_layers, meta.
    Matrix paths are relative to the manifest's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing file: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)

    n = int(raw["n_instances"])
    if n == 0:
        raise DatasetError(f"empty dataset: {raw.get('name', path.name)}")
    dim_A = int(raw["dim_A"])
    dim_B = int(raw["dim_B"])
    K_source = int(raw["K_source"])
    K_target = int(raw["K_target"])
    base = path.parent

    def load_ref(key: str, rows: int, cols: int) -> np.ndarray:
        ref = MatrixRef.from_json(raw[key], key)
        if (ref.rows, ref.cols) != (rows, cols):
            raise DatasetError(
                f"shape mismatch: {key} declares {ref.rows}x{ref.cols}, "
                f"manifest requires {rows}x{cols}"
            )
        return read_matrix(base / ref.path, ref.rows, ref.cols, key)

    layers = {
        "A": load_ref("layer_A", n, dim_A),
        "B": load_ref("layer_B", n, dim_B),
    }
    for lname, refraw in raw.get("extra_layers", {}).items():
        ref = MatrixRef.from_json(refraw, f"extra_layers[{lname}]")
        if ref.rows != n:
            raise DatasetError(f"shape mismatch: extra layer {lname} has {ref.rows} rows")
        layers[lname] = read_matrix(base / ref.path, ref.rows, ref.cols, lname)

    probs = load_ref("source_probs", n, K_source)

    labels = raw.get("labels")
    labarr = None if labels is None else np.asarray(labels, dtype=int)

    ds = EmbeddingDataset(
        name=str(raw.get("name", path.stem)),
        layers=layers,
        source_probs=probs,
        K_target=K_target,
        labels=labarr,
        item_refs=raw.get("item_refs"),
        class_names=raw.get("class_names"),
        meta=raw.get("meta", {}),
    )
    ds.validate()
    return ds


def write_dataset(ds: EmbeddingDataset, out_dir: str | Path) -> Path:
    """Write a dataset as manifest.json plus .f32 matrices; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc: dict = {
        "name": ds.name,
        "n_instances": ds.n_instances,
        "dim_A": ds.dim_A,
        "dim_B": ds.dim_B,
        "K_source": ds.K_source,
        "K_target": ds.K_target,
        "layer_A": write_matrix(out / "layer_A.f32", ds.layers["A"]).to_json(),
        "layer_B": write_matrix(out / "layer_B.f32", ds.layers["B"]).to_json(),
        "source_probs": write_matrix(out / "source_probs.f32", ds.source_probs).to_json(),
    }
    extra = {k: v for k, v in ds.layers.items() if k not in ("A", "B")}
    if extra:
        doc["extra_layers"] = {
            k: write_matrix(out / f"layer_{k}.f32", v).to_json() for k, v in extra.items()
        }
    if ds.labels is not None:
        doc["labels"] = [int(v) for v in ds.labels]
    if ds.item_refs is not None:
        doc["item_refs"] = list(ds.item_refs)
    if ds.class_names is not None:
        doc["class_names"] = list(ds.class_names)
    if ds.meta:
        doc["meta"] = ds.meta
    manifest = out / "manifest.json"
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return manifest


def load_snapshot(path: str | Path) -> SourceSnapshot:
    """Load a source snapshot (precomputed centers or raw source exports)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"missing file: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    base = path.parent

    def load_ref(group: dict, key: str, label: str) -> np.ndarray:
        ref = MatrixRef.from_json(group[key], label)
        return read_matrix(base / ref.path, ref.rows, ref.cols, label)

    centers = None
    if "centers_A" in raw:
        centers = {
            "A": load_ref(raw, "centers_A", "centers_A"),
            "B": load_ref(raw, "centers_B", "centers_B"),
        }
        for lname, refraw in raw.get("extra_centers", {}).items():
            ref = MatrixRef.from_json(refraw, f"extra_centers[{lname}]")
            centers[lname] = read_matrix(base / ref.path, ref.rows, ref.cols, lname)

    rawlayers = None
    rawlabels = None
    final = None
    if "source_A" in raw:
        rawlayers = {
            "A": load_ref(raw, "source_A", "source_A"),
            "B": load_ref(raw, "source_B", "source_B"),
        }
        for lname, refraw in raw.get("extra_source", {}).items():
            ref = MatrixRef.from_json(refraw, f"extra_source[{lname}]")
            rawlayers[lname] = read_matrix(base / ref.path, ref.rows, ref.cols, lname)
        rawlabels = np.asarray(raw["source_labels"], dtype=int)
        if "source_final" in raw:
            final = load_ref(raw, "source_final", "source_final")

    if centers is None and rawlayers is None:
        raise DatasetError(f"snapshot {path} holds neither centers_* nor source_* matrices")
    snap = SourceSnapshot(
        centers=centers,
        center_ids=raw.get("center_ids"),
        raw_layers=rawlayers,
        raw_labels=rawlabels,
        raw_final=final,
    )
    snap.validate()
    return snap


def write_snapshot(snap: SourceSnapshot, out_dir: str | Path) -> Path:
    """Write a snapshot as snapshot.json plus .f32 matrices; returns JSON path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc: dict = {}
    if snap.centers is not None:
        doc["centers_A"] = write_matrix(out / "centers_A.f32", snap.centers["A"]).to_json()
        doc["centers_B"] = write_matrix(out / "centers_B.f32", snap.centers["B"]).to_json()
        extra = {k: v for k, v in snap.centers.items() if k not in ("A", "B")}
        if extra:
            doc["extra_centers"] = {
                k: write_matrix(out / f"centers_{k}.f32", v).to_json()
                for k, v in extra.items()
            }
        if snap.center_ids is not None:
            doc["center_ids"] = [int(v) for v in snap.center_ids]
    if snap.raw_layers is not None:
        assert snap.raw_labels is not None
        doc["source_A"] = write_matrix(out / "source_A.f32", snap.raw_layers["A"]).to_json()
        doc["source_B"] = write_matrix(out / "source_B.f32", snap.raw_layers["B"]).to_json()
        extra = {k: v for k, v in snap.raw_layers.items() if k not in ("A", "B")}
        if extra:
            doc["extra_source"] = {
                k: write_matrix(out / f"source_{k}.f32", v).to_json()
                for k, v in extra.items()
            }
        doc["source_labels"] = [int(v) for v in snap.raw_labels]
        if snap.raw_final is not None:
            doc["source_final"] = write_matrix(out / "source_final.f32", snap.raw_final).to_json()
    jpath = out / "snapshot.json"
    with open(jpath, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return jpath


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split_pool(
    ds: EmbeddingDataset, test_fraction: float, seed: int
) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    """Split a labeled dataset into a query pool and a held-out test set.

    Stratified by label: every class with at least 2 instances lands in both
    parts. The test set size is round(n * test_fraction) up to the adjustments
    stratification forces. Deterministic for a fixed seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if ds.labels is None:
        raise ValueError("split_pool requires labels")
    n = ds.n_instances
    target_total = int(round(n * test_fraction))
    target_total = min(max(target_total, 1), n - 1)

    classes = np.unique(ds.labels)
    per_class = {int(c): np.flatnonzero(ds.labels == c) for c in classes}

    # Largest-remainder allocation of test slots across classes.
    quotas = {c: len(idx) * test_fraction for c, idx in per_class.items()}
    counts = {c: int(np.floor(q)) for c, q in quotas.items()}
    leftover = target_total - sum(counts.values())
    by_remainder = sorted(per_class, key=lambda c: (-(quotas[c] - counts[c]), c))
    for c in by_remainder:
        if leftover <= 0:
            break
        counts[c] += 1
        leftover -= 1

    # Presence fix: classes with >= 2 instances must appear in both parts.
    for c in sorted(per_class):
        nc = len(per_class[c])
        if nc < 2:
            warnings.warn(
                f"class {c} has {nc} instance(s); placed without stratification",
                stacklevel=2,
            )
            continue
        if counts[c] == 0:
            donor = max(
                (d for d in per_class if counts[d] > (1 if len(per_class[d]) >= 2 else 0)),
                key=lambda d: counts[d],
                default=None,
            )
            if donor is not None:
                counts[donor] -= 1
                counts[c] += 1
        elif counts[c] == nc:
            taker = min(
                (d for d in per_class if counts[d] < len(per_class[d]) - (1 if len(per_class[d]) >= 2 else 0)),
                key=lambda d: counts[d],
                default=None,
            )
            if taker is not None:
                counts[taker] += 1
                counts[c] -= 1

    rng = np.random.default_rng(seed)
    test_idx: list[np.ndarray] = []
    pool_idx: list[np.ndarray] = []
    for c in sorted(per_class):
        idx = per_class[c]
        perm = idx[rng.permutation(len(idx))]
        test_idx.append(perm[: counts[c]])
        pool_idx.append(perm[counts[c] :])
    test = np.sort(np.concatenate(test_idx))
    pool = np.sort(np.concatenate(pool_idx))
    return (
        ds.subset(pool, name=f"{ds.name}/pool"),
        ds.subset(test, name=f"{ds.name}/test"),
    )


# ---------------------------------------------------------------------------
# Synthetic transfer tasks
# ---------------------------------------------------------------------------

@dataclass
class SyntheticConfig:
    """Knobs for the synthetic transfer-task generator.

    The source task is K_source Gaussian clusters in layer-B space; layer-A
    activations are a fixed random linear image of layer B plus noise, so the
    A->B geometry carries a consistent, learnable transformation. Each target
    class reuses a source cluster displaced along its own random direction by
    ``shift_magnitude`` rms cluster radii (cluster_spread * sqrt(dim_B)):
    shift 1 moves a cluster by about its own extent, shift 0 reproduces the
    source distribution exactly. Independent per-class directions also spread
    the target classes apart, so harder benchmarks pair smaller shifts with a
    smaller ``center_scale``.
    """

    K_source: int = 10
    K_target: int = 5
    dim_A: int = 24
    dim_B: int = 16
    n_per_class_source: int = 100
    n_per_class_target: int = 200
    cluster_spread: float = 1.0
    shift_magnitude: float = 1.0
    center_scale: float | None = None
    noise_A: float = 0.05
    softmax_temperature: float = 1.0
    extra_A_layers: int = 0
    name: str = "synthetic"

    def validate(self) -> None:
        for fname in (
            "K_source",
            "K_target",
            "dim_A",
            "dim_B",
            "n_per_class_source",
            "n_per_class_target",
        ):
            if getattr(self, fname) <= 0:
                raise ValueError(f"{fname} must be positive, got {getattr(self, fname)}")
        if self.cluster_spread <= 0 or self.softmax_temperature <= 0:
            raise ValueError("cluster_spread and softmax_temperature must be positive")
        if self.shift_magnitude < 0 or self.noise_A < 0 or self.extra_A_layers < 0:
            raise ValueError("shift_magnitude, noise_A, extra_A_layers must be >= 0")

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        cfg = cls(**raw)
        cfg.validate()
        return cfg


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def generate_synthetic_task(
    config: SyntheticConfig, seed: int
) -> tuple[EmbeddingDataset, SourceSnapshot]:
    """Generate a target pool and matching source snapshot.

    Deterministic: the same config and seed produce byte-identical matrices.
    The snapshot carries the raw source exports alongside the selected
    centers, so center resolution can be cross-checked and held-out source
    instances remain available.
    """
    config.validate()
    # Independent derived streams keep each piece stable if others grow.
    rng_src = np.random.default_rng([seed, 1])
    rng_map = np.random.default_rng([seed, 2])
    rng_tgt = np.random.default_rng([seed, 3])

    Ks, Kt = config.K_source, config.K_target
    dA, dB = config.dim_A, config.dim_B
    spread = config.cluster_spread
    scale = config.center_scale
    if scale is None:
        # Default puts rms inter-cluster distance near 3.5 spreads: classes
        # overlap enough that boundary placement matters at small budgets.
        scale = 3.5 * spread / np.sqrt(2.0 * dB)

    mu = scale * rng_src.standard_normal((Ks, dB))

    # Source instances in layer-B space.
    ns = Ks * config.n_per_class_source
    src_labels = np.repeat(np.arange(Ks), config.n_per_class_source)
    src_B = mu[src_labels] + spread * rng_src.standard_normal((ns, dB))

    # Fixed linear A-map shared by source and target ("the network").
    a_maps = [
        rng_map.standard_normal((dB, dA)) / np.sqrt(dB)
        for _ in range(1 + config.extra_A_layers)
    ]

    def to_A(xB: np.ndarray, m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return xB @ m + config.noise_A * rng.standard_normal((xB.shape[0], m.shape[1]))

    src_layers = {"B": src_B, "A": to_A(src_B, a_maps[0], rng_src)}
    for i, m in enumerate(a_maps[1:], start=2):
        src_layers[f"A{i}"] = to_A(src_B, m, rng_src)

    # Target classes: a subset (cycled when K_target > K_source) of source
    # clusters, each displaced along its own random direction.
    assignment = rng_tgt.permutation(Ks)[np.arange(Kt) % Ks]
    directions = rng_tgt.standard_normal((Kt, dB))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radius = spread * np.sqrt(dB)
    tgt_mu = mu[assignment] + config.shift_magnitude * radius * directions

    nt = Kt * config.n_per_class_target
    tgt_labels = np.repeat(np.arange(Kt), config.n_per_class_target)
    tgt_B = tgt_mu[tgt_labels] + spread * rng_tgt.standard_normal((nt, dB))
    tgt_layers = {"B": tgt_B, "A": to_A(tgt_B, a_maps[0], rng_tgt)}
    for i, m in enumerate(a_maps[1:], start=2):
        tgt_layers[f"A{i}"] = to_A(tgt_B, m, rng_tgt)

    # Source-model probabilities: softmax of negative squared distance to
    # the source cluster means in layer-B space.
    def source_probs_for(xB: np.ndarray) -> np.ndarray:
        d2 = ((xB[:, None, :] - mu[None, :, :]) ** 2).sum(axis=2)
        return _softmax_rows(-d2 / config.softmax_temperature)

    tgt_probs = source_probs_for(tgt_B)

    # Landmark selection on the source instances (layer B is the final
    # representation here): nearest instance to each class mean.
    centers_idx = np.empty(Ks, dtype=int)
    for k in range(Ks):
        members = np.flatnonzero(src_labels == k)
        zbar = src_B[members].mean(axis=0)
        d2 = ((src_B[members] - zbar) ** 2).sum(axis=1)
        centers_idx[k] = members[int(np.argmin(d2))]

    # Round to float32 so in-memory values match the .f32 files exactly.
    tgt_layers = {k: as_float32_exact(v) for k, v in tgt_layers.items()}
    tgt_probs = as_float32_exact(tgt_probs)
    src_layers = {k: as_float32_exact(v) for k, v in src_layers.items()}

    perm = np.random.default_rng([seed, 4]).permutation(nt)
    dataset = EmbeddingDataset(
        name=f"{config.name}-s{seed}",
        layers={k: v[perm] for k, v in tgt_layers.items()},
        source_probs=tgt_probs[perm],
        K_target=Kt,
        labels=tgt_labels[perm],
        item_refs=[f"{config.name}/instance-{i:05d}" for i in perm],
        class_names=[f"class_{k}" for k in range(Kt)],
        meta={
            "generator": "generate_synthetic_task",
            "seed": seed,
            "shift_magnitude": config.shift_magnitude,
            "source_assignment": [int(a) for a in assignment],
        },
    )
    dataset.validate()
    snapshot = SourceSnapshot(
        centers={k: v[centers_idx] for k, v in src_layers.items()},
        center_ids=[int(i) for i in centers_idx],
        raw_layers=src_layers,
        raw_labels=src_labels,
    )
    snapshot.validate()
    return dataset, snapshot
