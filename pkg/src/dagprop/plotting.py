"""Figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .convergence import ConvergenceVerdict, IterationRecord  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "savefig.dpi": 120,
    }
)


def _save(fig, path: Path, config_hash: Optional[str]) -> Path:
    meta = {"Description": f"config_hash={config_hash}"} if config_hash else None
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_training(
    records: Sequence[IterationRecord],
    path: str | Path,
    verdict: Optional[ConvergenceVerdict] = None,
    config_hash: Optional[str] = None,
) -> Path:
    """Error, gradient norm and second-order ratio against iteration."""
    k = np.array([r.k for r in records])
    E = np.array([r.E for r in records])
    qn = np.array([r.grad_norm for r in records])
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))

    axes[0].semilogy(k, np.maximum(E, np.finfo(float).tiny), lw=1.2)
    axes[0].set_xlabel("iteration k")
    axes[0].set_ylabel("E")
    axes[0].set_title("training error")

    axes[1].semilogy(k, np.maximum(qn, np.finfo(float).tiny), lw=1.2, color="C1")
    if verdict is not None:
        axes[1].axhline(verdict.tail_threshold, ls="--", lw=0.8, color="k")
    axes[1].set_xlabel("iteration k")
    axes[1].set_ylabel("||q||")
    axes[1].set_title("gradient norm")

    if verdict is not None and verdict.theorem2_residuals:
        rk, rv = zip(*verdict.theorem2_residuals)
        axes[2].semilogy(rk, np.maximum(rv, np.finfo(float).tiny), ".", ms=2, color="C2")
        axes[2].axhline(verdict.estimated_C, ls="--", lw=0.8, color="k", label="estimated C")
        axes[2].legend(frameon=False)
    axes[2].set_xlabel("iteration k")
    axes[2].set_ylabel("|Q - dE| / increments")
    axes[2].set_title("second-order ratio")

    fig.tight_layout()
    return _save(fig, Path(path), config_hash)


def plot_comparison(rows: Sequence[dict], path: str | Path, config_hash: Optional[str] = None) -> Path:
    """Mean PSNR / SSIM / NRMSE per code size, one bar group per model."""
    models = sorted({r["model"] for r in rows})
    codes = sorted({r["code"] for r in rows}, reverse=True)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    width = 0.8 / max(len(models), 1)
    x = np.arange(len(codes))
    for ax, metric in zip(axes, ("psnr", "ssim", "nrmse")):
        for m_idx, model in enumerate(models):
            vals = [
                np.mean([r[metric] for r in rows if r["model"] == model and r["code"] == c])
                for c in codes
            ]
            ax.bar(x + (m_idx - (len(models) - 1) / 2) * width, vals, width, label=model)
        ax.set_xticks(x, [f"1x{c}" for c in codes])
        ax.set_xlabel("code")
        ax.set_title(metric.upper())
    axes[0].legend(frameon=False)
    fig.tight_layout()
    return _save(fig, Path(path), config_hash)


def plot_reconstructions(
    originals: np.ndarray,
    reconstructions: dict[str, np.ndarray],
    image_shape: tuple[int, int],
    path: str | Path,
    n: int = 6,
    config_hash: Optional[str] = None,
) -> Path:
    """First ``n`` test images and each model's reconstruction, one row per source."""
    n = min(n, len(originals))
    rows = [("original", originals)] + list(reconstructions.items())
    fig, axes = plt.subplots(len(rows), n, figsize=(1.3 * n, 1.4 * len(rows)), squeeze=False)
    for r, (label, imgs) in enumerate(rows):
        for c in range(n):
            ax = axes[r][c]
            ax.imshow(np.clip(imgs[c].reshape(image_shape), 0, 1), cmap="gray", vmin=0, vmax=1)
            ax.set_xticks([])
            ax.set_yticks([])
            ax.grid(False)
        axes[r][0].set_ylabel(label, fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path), config_hash)
