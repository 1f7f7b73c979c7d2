"""Report figures rendered next to the TSV/JSON evaluation output."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .eval_metrics import RunMetrics
from .evidence_fusion import FusionParams
from .pipeline import TopicTable, table_average_precision


def metric_summary_figure(metrics_by_label: Mapping[str, RunMetrics],
                          out_path: str | Path) -> Path:
    """Grouped bars of mean AP / P@20 / NDCG@20 per run."""
    labels = list(metrics_by_label)
    metric_names = ["AP", "P@20", "NDCG@20"]
    values = np.array([
        [m.mean_ap, m.mean_p20, m.mean_ndcg20] for m in metrics_by_label.values()
    ])
    x = np.arange(len(metric_names))
    width = 0.8 / max(len(labels), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, label in enumerate(labels):
        ax.bar(x + i * width, values[i], width, label=label)
    ax.set_xticks(x + width * (len(labels) - 1) / 2)
    ax.set_xticklabels(metric_names)
    ax.set_ylim(0, 1)
    ax.set_ylabel("mean over topics")
    ax.set_title("Ranking effectiveness")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def per_topic_ap_figure(metrics_by_label: Mapping[str, RunMetrics],
                        out_path: str | Path) -> Path:
    """AP per topic, one bar group per topic."""
    topic_ids = sorted({t.topic_id for m in metrics_by_label.values() for t in m.topics})
    x = np.arange(len(topic_ids))
    width = 0.8 / max(len(metrics_by_label), 1)
    fig, ax = plt.subplots(figsize=(max(7, 0.5 * len(topic_ids)), 4))
    for i, (label, metrics) in enumerate(metrics_by_label.items()):
        ap_of = {t.topic_id: t.ap for t in metrics.topics}
        ax.bar(x + i * width, [ap_of.get(t, 0.0) for t in topic_ids], width, label=label)
    ax.set_xticks(x + width * (len(metrics_by_label) - 1) / 2)
    ax.set_xticklabels(topic_ids, rotation=45, ha="right", fontsize=7)
    ax.set_ylim(0, 1)
    ax.set_ylabel("AP")
    ax.set_title("Per-topic average precision")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def alpha_sensitivity_figure(tables: Mapping[str, TopicTable],
                             alpha_values: Sequence[float],
                             out_path: str | Path) -> Path:
    """Mean AP as a function of the interpolation weight (top sentence
    only); descriptive, computed over all topics."""
    topic_ids = sorted(tables)
    means = []
    for alpha in alpha_values:
        params = FusionParams(alpha, (1.0,), 1)
        means.append(np.mean([
            table_average_precision(tables[t], params) for t in topic_ids
        ]))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(list(alpha_values), means, marker="o")
    ax.set_xlabel("alpha (weight on retrieval score)")
    ax.set_ylabel("mean AP")
    ax.set_ylim(0, 1.02)
    ax.set_title("Interpolation sensitivity (top sentence only)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
