"""Active model adaptation on precomputed embeddings: landmark-based
distinctiveness plus prediction uncertainty drive batch-mode label queries
that fine-tune a softmax head for a new task."""

from .data import (
    DatasetError,
    EmbeddingDataset,
    MatrixRef,
    SourceSnapshot,
    SyntheticConfig,
    generate_synthetic_task,
    load_manifest,
    load_snapshot,
    read_matrix,
    split_pool,
    write_dataset,
    write_matrix,
    write_snapshot,
)
from .patterns import (
    CenterSet,
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
from .selection import (
    BatchSelection,
    ScoreRecord,
    normalize_uncertainty,
    records_to_csv,
    score,
    select_batch,
    uncertainty,
)
from .trainer import (
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
from .loop import (
    LoopState,
    MetricPoint,
    Oracle,
    OracleError,
    OracleTimeout,
    QueryItem,
    StrategyConfig,
    initialize,
    load_checkpoint,
    run,
    run_iteration,
    save_checkpoint,
    score_unlabeled,
    simulated_oracle,
)
from .server import InteractiveOracle, serve_interactive_oracle

__version__ = "0.1.0"
