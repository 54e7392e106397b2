"""MSE, PSNR and SSIM between RGB rasters."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ContractViolation
from .model import Raster

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 255.0


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssim: float
    mse: float
    bytes: int


def _pixels(x) -> np.ndarray:
    return x.pixels if isinstance(x, Raster) else np.asarray(x)


def _pair(a, b):
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape != pb.shape:
        raise ContractViolation(f"image shapes differ: {pa.shape} vs {pb.shape}")
    return pa, pb


def sse(a, b) -> int:
    """Sum of squared 8-bit differences over all pixels and channels."""
    pa, pb = _pair(a, b)
    d = pa.astype(np.int64) - pb.astype(np.int64)
    return int(np.dot(d.ravel(), d.ravel()))


def mse(a, b) -> float:
    pa, pb = _pair(a, b)
    return sse(pa, pb) / pa.size


def psnr_from_mse(m: float) -> float:
    if m <= 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(DATA_RANGE ** 2 / m))


def psnr(a, b) -> float:
    return psnr_from_mse(mse(a, b))


def luma(rgb) -> np.ndarray:
    """ITU-R BT.601 luma as float."""
    p = np.asarray(rgb, dtype=np.float64)
    return 0.299 * p[..., 0] + 0.587 * p[..., 1] + 0.114 * p[..., 2]


def _gaussian_taps() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2 * SSIM_SIGMA ** 2))
    return w / w.sum()


_TAPS = _gaussian_taps()


def _window_mean(img: np.ndarray) -> np.ndarray:
    # separable Gaussian, keep only positions where the window fits
    r = SSIM_WINDOW // 2
    out = correlate1d(img, _TAPS, axis=0, mode="constant")
    out = correlate1d(out, _TAPS, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """SSIM at every valid 11x11 window position of two float luma planes."""
    c1 = (SSIM_K1 * DATA_RANGE) ** 2
    c2 = (SSIM_K2 * DATA_RANGE) ** 2
    mx, my = _window_mean(x), _window_mean(y)
    sxx = _window_mean(x * x) - mx * mx
    syy = _window_mean(y * y) - my * my
    sxy = _window_mean(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(a, b) -> float:
    """Mean SSIM of the BT.601 luma planes (Gaussian window, sigma 1.5)."""
    pa, pb = _pair(a, b)
    if min(pa.shape[0], pa.shape[1]) < SSIM_WINDOW:
        raise ContractViolation(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    return float(ssim_map(luma(pa), luma(pb)).mean())


def quality(reference, candidate, n_bytes: int = 0) -> QualityReport:
    m = mse(reference, candidate)
    return QualityReport(psnr=psnr_from_mse(m), ssim=ssim(reference, candidate), mse=m,
                         bytes=int(n_bytes))
