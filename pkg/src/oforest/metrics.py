"""Reconstruction-quality metrics and wall-clock instrumentation.

SSIM uses the canonical constants (Gaussian window 11x11, sigma 1.5,
K1 = 0.01, K2 = 0.03, weighted moments without sample-covariance
correction) so numbers match other standard implementations.  Images
smaller than the 11x11 window fall back to a single full-image Gaussian
window.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, ShapeMismatch

_K1 = 0.01
_K2 = 0.03
_WINDOW = 11
_SIGMA = 1.5


@dataclass
class Timing:
    label: str
    seconds: float = 0.0


@contextmanager
def stopwatch(label: str):
    """Context manager filling a Timing with elapsed wall-clock seconds."""
    t = Timing(label=label)
    start = time.perf_counter()
    try:
        yield t
    finally:
        t.seconds = time.perf_counter() - start


def mse(a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 1:
        raise LengthMismatch("vectors must not be empty")
    d = a - b
    return float(np.mean(d * d))


def _gaussian_kernel(kh: int, kw: int) -> np.ndarray:
    def axis(k):
        x = np.arange(k) - (k - 1) / 2.0
        return np.exp(-(x * x) / (2.0 * _SIGMA * _SIGMA))
    kern = np.outer(axis(kh), axis(kw))
    return kern / kern.sum()


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float) -> np.ndarray:
    """Local SSIM values over sliding (or single full-image) windows."""
    h, w = a.shape
    kh, kw = (_WINDOW, _WINDOW) if h >= _WINDOW and w >= _WINDOW else (h, w)
    kern = _gaussian_kernel(kh, kw)

    def smooth(img):
        win = np.lib.stride_tricks.sliding_window_view(img, (kh, kw))
        return np.tensordot(win, kern, axes=([2, 3], [0, 1]))

    mu_a = smooth(a)
    mu_b = smooth(b)
    s_aa = smooth(a * a) - mu_a * mu_a
    s_bb = smooth(b * b) - mu_b * mu_b
    s_ab = smooth(a * b) - mu_a * mu_b
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    return (((2 * mu_a * mu_b + c1) * (2 * s_ab + c2))
            / ((mu_a * mu_a + mu_b * mu_b + c1) * (s_aa + s_bb + c2)))


def ssim(a, b, data_range: float = 255.0) -> float:
    """Mean structural similarity; multi-channel images average the
    per-channel values."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} vs {b.shape}")
    if a.ndim == 3:
        return float(np.mean([ssim(a[:, :, c], b[:, :, c], data_range)
                              for c in range(a.shape[2])]))
    if a.ndim != 2:
        raise ShapeMismatch(f"expected 2-D or 3-D images, got {a.ndim}-D")
    return float(np.mean(ssim_map(a, b, data_range)))
