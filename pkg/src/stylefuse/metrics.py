"""Evaluation measures between a result image and its ground truth.

Two conventions ship for the pixel errors because the benchmark convention
is ambiguous: a "sum" convention (per-image totals in 0-255 units, rounded
to integers only at report time) and a "normalized" per-pixel convention on
the [0,1] domain.  Both are labeled in the report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ContractError, DimensionError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def l1_error(a, b) -> float:
    """Per-image sum of absolute differences in 0-255 units."""
    a, b = _check_pair(a, b)
    return float(np.abs(255.0 * a - 255.0 * b).sum())


def l2_error(a, b) -> float:
    """Root of the per-image sum of squared differences in 0-255 units."""
    a, b = _check_pair(a, b)
    d = 255.0 * a - 255.0 * b
    return float(np.sqrt((d * d).sum()))


def l1_error_normalized(a, b) -> float:
    """Mean absolute difference on the [0,1] domain."""
    a, b = _check_pair(a, b)
    return float(np.abs(a - b).mean())


def l2_error_normalized(a, b) -> float:
    """Mean squared difference on the [0,1] domain."""
    a, b = _check_pair(a, b)
    d = a - b
    return float((d * d).mean())


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    xs = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-0.5 * (xs / sigma) ** 2)
    g /= g.sum()
    return np.outer(g, g)


def _windows(plane: np.ndarray, size: int) -> np.ndarray:
    """All valid [size,size] windows of a 2-D array: shape [oh, ow, size, size]."""
    h, w = plane.shape
    s0, s1 = plane.strides
    return np.lib.stride_tricks.as_strided(
        plane,
        shape=(h - size + 1, w - size + 1, size, size),
        strides=(s0, s1, s0, s1),
        writeable=False,
    )


def ssim(a, b, data_range: float = 1.0) -> float:
    """Gaussian-weighted local-statistics SSIM, mean over valid pixels and channels."""
    a, b = _check_pair(a, b)
    if a.ndim == 2:
        a = a[None]
        b = b[None]
    if min(a.shape[1], a.shape[2]) < SSIM_WINDOW:
        raise ContractError(
            f"image {a.shape[1]}x{a.shape[2]} smaller than the {SSIM_WINDOW} window"
        )
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    values = []
    for c in range(a.shape[0]):
        wa = _windows(a[c], SSIM_WINDOW)
        wb = _windows(b[c], SSIM_WINDOW)
        mu_a = np.einsum("ijkl,kl->ij", wa, window)
        mu_b = np.einsum("ijkl,kl->ij", wb, window)
        aa = np.einsum("ijkl,kl->ij", wa * wa, window)
        bb = np.einsum("ijkl,kl->ij", wb * wb, window)
        ab = np.einsum("ijkl,kl->ij", wa * wb, window)
        var_a = aa - mu_a * mu_a
        var_b = bb - mu_b * mu_b
        cov = ab - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        values.append(num / den)
    return float(np.mean(values))


@dataclass
class MetricReport:
    l1_sum: float
    l2_root_sum: float
    l1_mean: float
    l2_mean_square: float
    ssim: float
    image_count: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls(**json.loads(text))

    def to_table(self) -> str:
        rows = [
            ("l1 error (per-image sum, 0-255)", f"{round(self.l1_sum)}"),
            ("l2 error (root-sum, 0-255)", f"{round(self.l2_root_sum)}"),
            ("l1 error (per-pixel mean, [0,1])", f"{self.l1_mean:.6f}"),
            ("l2 error (mean square, [0,1])", f"{self.l2_mean_square:.6f}"),
            ("SSIM", f"{self.ssim:.4f}"),
            ("images averaged", f"{self.image_count}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def evaluate_pair(a, b) -> MetricReport:
    return MetricReport(
        l1_sum=l1_error(a, b),
        l2_root_sum=l2_error(a, b),
        l1_mean=l1_error_normalized(a, b),
        l2_mean_square=l2_error_normalized(a, b),
        ssim=ssim(a, b),
    )
