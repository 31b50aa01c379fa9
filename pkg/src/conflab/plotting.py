"""PNG figures written next to each experiment's data files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings, so reruns give identical files
PNG_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=PNG_META)
    plt.close(fig)


def plot_record(record, path, title=""):
    epochs = record.column("epoch")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, record.column("train_acc_noisy"), label="train (given labels)")
    ax.plot(epochs, record.column("train_acc_clean"), label="train (clean labels)")
    ax.plot(epochs, record.column("test_acc"), label="test")
    ax.set_xlabel("epoch")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_noise_sweep(cfg, medians, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    rates = list(cfg.noise_rates)
    for m in cfg.methods:
        ys = [medians[(m, ci)]["final_test_acc"] if (m, ci) in medians else np.nan for ci in range(len(rates))]
        ax.plot(rates, ys, marker="o", label=m)
    ax.set_xlabel("noise rate")
    ax.set_ylabel("median clean test accuracy")
    ax.legend()
    _save(fig, path)


def plot_random_labels(cfg, medians, records, path):
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    ms = [m for m in cfg.methods if (m, 0) in medians]
    x = np.arange(len(ms))
    left.bar(x - 0.2, [medians[(m, 0)]["train_acc_noisy"] for m in ms], 0.4, label="train")
    left.bar(x + 0.2, [medians[(m, 0)]["test_acc_noisy"] for m in ms], 0.4, label="test")
    left.set_xticks(x, ms)
    left.set_ylabel("accuracy on random labels")
    left.legend()
    for m in ms:
        rec = records[(m, 0, medians[(m, 0)]["replicate"])]
        right.plot(rec.column("epoch"), rec.column("soft_label_uniformity"), label=m)
    right.set_xlabel("epoch")
    right.set_ylabel("distance of soft labels from uniform")
    right.legend()
    _save(fig, path)


def plot_imbalance(cfg, medians, records, path):
    ratios = list(cfg.imbalance_ratios)
    fig, axes = plt.subplots(1, len(ratios), figsize=(4 * len(ratios), 3.5), squeeze=False)
    for ci, (ax, ratio) in enumerate(zip(axes[0], ratios)):
        for m in cfg.methods:
            med = medians.get((m, ci))
            if med is None:
                continue
            rec = records[(m, ci, med["replicate"])]
            ax.plot(rec.column("epoch"), rec.worst_class_curve(), label=m)
        ax.axvline(cfg.train.start_epoch, color="grey", linestyle=":")
        ax.set_title(f"ratio {ratio:g}")
        ax.set_xlabel("epoch")
        ax.set_ylim(0, 1.02)
    axes[0][0].set_ylabel("worst-class test accuracy")
    axes[0][0].legend()
    _save(fig, path)


def plot_variance(candidates, rows, path):
    fig, ax = plt.subplots(figsize=(5, 5))
    emp = [r.empirical_variance for r in rows]
    closed = [r.closed_form_variance for r in rows]
    ax.scatter(closed, emp, s=14)
    for (name, _), c, e in zip(candidates, closed, emp):
        if not name.startswith("random"):
            ax.annotate(name, (c, e), fontsize=8)
    lo, hi = min(closed + emp), max(closed + emp)
    ax.plot([lo, hi], [lo, hi], color="grey", linewidth=0.8)
    ax.set_xlabel("closed-form variance")
    ax.set_ylabel("empirical variance")
    _save(fig, path)


def render(cfg, root, medians, records, curves=None):
    exp = cfg.experiment
    if exp == "noise_sweep":
        plot_noise_sweep(cfg, medians, root / "noise_sweep.png")
    elif exp == "random_labels":
        plot_random_labels(cfg, medians, records, root / "random_labels.png")
    elif exp == "imbalance":
        plot_imbalance(cfg, medians, records, root / "worst_class.png")
    for (method, ci), med in medians.items():
        rec = records[(method, ci, med["replicate"])]
        cell = f"{method}, condition {med['condition']}"
        plot_record(rec, root / method / f"curves_{ci}.png", cell)
