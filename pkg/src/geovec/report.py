"""Figures rendered next to the delimited report files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .predict import CVReport


def render_cv_figure(report: CVReport, path: str | Path) -> None:
    """Per-fold MAE/RMSE/R2 bars with the mean drawn through each panel."""
    folds = list(range(1, report.folds + 1))
    series = list(zip(*report.per_fold))
    means = [report.mean_mae, report.mean_rmse, report.mean_r2]
    labels = ["MAE", "RMSE", "R$^2$"]
    fig, axes = plt.subplots(1, 3, figsize=(9, 3))
    for ax, values, mean, label in zip(axes, series, means, labels):
        ax.bar(folds, values, color="#4878a8")
        ax.axhline(mean, color="#b04030", linewidth=1, label=f"mean {mean:.3f}")
        ax.set_xlabel("fold")
        ax.set_title(label)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_holdout_figure(mae: float, rmse: float, r2: float, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(["MAE", "RMSE", "R$^2$"], [mae, rmse, r2], color="#4878a8")
    for i, v in enumerate([mae, rmse, r2]):
        ax.text(i, v, f"{v:.3f}", ha="center", va="bottom", fontsize=8)
    ax.set_title("holdout metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_loss_figure(history: list[tuple[int, float, float]], path: str | Path) -> None:
    epochs = [e for e, _, _ in history]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(epochs, [t for _, t, _ in history], label="train")
    ax.plot(epochs, [v for _, _, v in history], label="val")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_compare_figure(
    labels: list[str],
    mses: list[float],
    path: str | Path,
    improvement_pct: float | None = None,
) -> None:
    fig, ax = plt.subplots(figsize=(4, 3.2))
    ax.bar(labels, mses, color=["#888888", "#4878a8"][: len(labels)])
    for i, v in enumerate(mses):
        ax.text(i, v, f"{v:.4f}", ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("test MSE")
    if improvement_pct is not None:
        ax.set_title(f"MSE improvement: {improvement_pct:.2f}%")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
