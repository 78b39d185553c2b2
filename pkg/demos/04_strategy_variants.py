#!/usr/bin/env python3
"""Compare the selection-strategy variants on one task.

 - adma            : the dynamic distinctiveness/uncertainty blend
 - adma2           : distinctiveness averaged over two layer pairs (A->B and
                     A2->B), needing a second early-layer export
 - alpha=distance  : blend weights from reciprocal landmark distances instead
                     of the source model's predictions
 - uncertainty_only / distinctiveness_only / random : ablations
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from adma import StrategyConfig, SyntheticConfig, generate_synthetic_task, run

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

config = SyntheticConfig(
    K_source=10, K_target=5, n_per_class_target=400,
    center_scale=2.0 / np.sqrt(2 * 16), shift_magnitude=0.75,
    extra_A_layers=1,  # provides layer "A2" for the two-pattern variant
)
dataset, snapshot = generate_synthetic_task(config, seed=11)

variants = {
    "adma": StrategyConfig(strategy="adma", batch_size=10, budget=100,
                           seed=11, test_fraction=0.5),
    "adma2": StrategyConfig(strategy="adma2", batch_size=10, budget=100,
                            seed=11, test_fraction=0.5,
                            layer_pairs=(("A", "B"), ("A2", "B"))),
    "adma-distance": StrategyConfig(strategy="adma", alpha_mode="distance",
                                    batch_size=10, budget=100, seed=11,
                                    test_fraction=0.5),
    "uncertainty": StrategyConfig(strategy="uncertainty_only", batch_size=10,
                                  budget=100, seed=11, test_fraction=0.5),
    "distinctiveness": StrategyConfig(strategy="distinctiveness_only",
                                      batch_size=10, budget=100, seed=11,
                                      test_fraction=0.5),
    "random": StrategyConfig(strategy="random", batch_size=10, budget=100,
                             seed=11, test_fraction=0.5),
}

fig, ax = plt.subplots(figsize=(8, 5))
for name, strat_cfg in variants.items():
    _, curve = run(dataset, snapshot, strat_cfg)
    ax.plot([m.queries for m in curve], [m.accuracy for m in curve],
            marker="o", markersize=3, label=name)
    print(f"{name:>16}: final accuracy {curve[-1].accuracy:.3f}, "
          f"macro AUC {curve[-1].macro_auc:.3f}")

ax.set_xlabel("labels queried")
ax.set_ylabel("test accuracy")
ax.grid(alpha=0.3)
ax.legend(fontsize=8)
ax.set_title("Selection strategy variants")
fig.tight_layout()
fig.savefig(OUT / "04_strategy_variants.png", dpi=120)
print(f"saved {OUT / '04_strategy_variants.png'}")
