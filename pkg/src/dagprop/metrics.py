"""PSNR, SSIM and NRMSE between a reference image and its reconstruction.

Argument order matters for PSNR and NRMSE: the first image is the reference.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateReference, ShapeMismatch, TooSmall

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_MIN_SIZE = 7


def _pair(reference, reconstruction) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(reference, dtype=np.float64)
    rec = np.asarray(reconstruction, dtype=np.float64)
    if ref.shape != rec.shape:
        raise ShapeMismatch(f"shapes differ: {ref.shape} vs {rec.shape}")
    if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(rec))):
        raise ValueError("images must be finite")
    return ref, rec


def mse(reference, reconstruction) -> float:
    ref, rec = _pair(reference, reconstruction)
    return float(np.mean(np.square(ref - rec)))


def psnr(reference, reconstruction, data_range: float = 1.0) -> float:
    """``10 log10(data_range^2 / MSE)`` in dB; ``inf`` for identical images."""
    err = mse(reference, reconstruction)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range * data_range / err)


def nrmse(reference, reconstruction) -> float:
    """Root-mean-square error over the root-mean-square of the reference."""
    ref, rec = _pair(reference, reconstruction)
    denom = float(np.mean(np.square(ref)))
    if denom == 0.0:
        raise DegenerateReference("reference is identically zero")
    return math.sqrt(float(np.mean(np.square(ref - rec)))) / math.sqrt(denom)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalised 2-D Gaussian of odd side ``size``."""
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim_window_size(shape: tuple[int, ...]) -> int:
    """11, or the largest odd size fitting images smaller than 11 pixels."""
    side = min(SSIM_WINDOW, *shape)
    return side if side % 2 else side - 1


def ssim_map(reference, reconstruction, data_range: float = 1.0) -> np.ndarray:
    """Per-window SSIM over every fully contained Gaussian window."""
    ref, rec = _pair(reference, reconstruction)
    if ref.ndim != 2:
        raise ShapeMismatch(f"SSIM needs 2-D images, got shape {ref.shape}")
    if min(ref.shape) < SSIM_MIN_SIZE:
        raise TooSmall(f"SSIM needs at least {SSIM_MIN_SIZE}x{SSIM_MIN_SIZE} pixels, got {ref.shape}")
    size = ssim_window_size(ref.shape)
    win = gaussian_window(size)

    def wmean(img):
        return np.einsum("ijkl,kl->ij", sliding_window_view(img, (size, size)), win)

    mu_x = wmean(ref)
    mu_y = wmean(rec)
    var_x = wmean(ref * ref) - mu_x * mu_x
    var_y = wmean(rec * rec) - mu_y * mu_y
    cov = wmean(ref * rec) - mu_x * mu_y
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim(reference, reconstruction, data_range: float = 1.0) -> float:
    """Mean of :func:`ssim_map`."""
    return float(np.mean(ssim_map(reference, reconstruction, data_range)))


def image_metrics(reference, reconstruction, data_range: float = 1.0) -> dict[str, float]:
    return {
        "psnr": psnr(reference, reconstruction, data_range),
        "ssim": ssim(reference, reconstruction, data_range),
        "nrmse": nrmse(reference, reconstruction),
    }
