"""Landmark-driven normalization and compositing.

Covers face rectification (rotate so the eye axis is horizontal, crop a
square slightly larger than the face, resample), 3-point affine estimation,
bilinear warping, convex-hull mask rasterization with Gaussian feathering,
and per-pixel alpha blending.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ContractError, DegenerateGeometryError, DimensionError

LEFT_EYE = slice(36, 42)
RIGHT_EYE = slice(42, 48)
MOUTH = slice(48, 68)


@dataclass
class LandmarkSet:
    """The standard 68-point facial annotation in pixel coordinates."""

    points: np.ndarray  # [68, 2], (x, y), origin top-left
    width: int
    height: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.shape != (68, 2):
            raise ContractError(f"expected 68 (x,y) points, got shape {self.points.shape}")

    def left_eye_center(self) -> np.ndarray:
        return self.points[LEFT_EYE].mean(axis=0)

    def right_eye_center(self) -> np.ndarray:
        return self.points[RIGHT_EYE].mean(axis=0)

    def mouth_center(self) -> np.ndarray:
        return self.points[MOUTH].mean(axis=0)

    def anchor_triplet(self) -> np.ndarray:
        """Stable 3-point basis for affine estimation: eye centers + mouth center."""
        return np.stack([self.left_eye_center(),
                         self.right_eye_center(),
                         self.mouth_center()])

    def transformed(self, t: "AffineTransform", width: int, height: int) -> "LandmarkSet":
        return LandmarkSet(t.apply(self.points), width, height)

    def save_json(self, path) -> None:
        payload = {"width": self.width, "height": self.height,
                   "points": self.points.tolist()}
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load_json(cls, path) -> "LandmarkSet":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(np.asarray(payload["points"], dtype=np.float64),
                   int(payload["width"]), int(payload["height"]))


@dataclass
class AffineTransform:
    """2x3 matrix mapping source pixel coordinates to destination coordinates."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (2, 3):
            raise ContractError(f"affine matrix must be 2x3, got {self.matrix.shape}")

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = pts @ self.matrix[:, :2].T + self.matrix[:, 2]
        return out if np.asarray(points).ndim == 2 else out[0]

    def inverse(self) -> "AffineTransform":
        a = self.matrix[:, :2]
        det = np.linalg.det(a)
        if abs(det) < 1e-12:
            raise DegenerateGeometryError("affine transform is not invertible")
        a_inv = np.linalg.inv(a)
        return AffineTransform(np.hstack([a_inv, (-a_inv @ self.matrix[:, 2])[:, None]]))

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """Transform equal to applying `inner` first, then self."""
        a = self.matrix[:, :2] @ inner.matrix[:, :2]
        t = self.matrix[:, :2] @ inner.matrix[:, 2] + self.matrix[:, 2]
        return AffineTransform(np.hstack([a, t[:, None]]))


@dataclass(frozen=True)
class CropConfig:
    eye_to_eye_scale: float = 4.0
    eye_to_mouth_scale: float = 3.6
    output_resolution: int = 64

    def __post_init__(self):
        if self.eye_to_eye_scale <= 1.0 or self.eye_to_mouth_scale <= 1.0:
            raise ContractError("crop scales must exceed 1 (region larger than the face)")
        if self.output_resolution < 1:
            raise ContractError("output_resolution must be positive")


def estimate_affine(src: np.ndarray, dst: np.ndarray) -> AffineTransform:
    """Exact affine mapping three source points onto three destination points."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != (3, 2) or dst.shape != (3, 2):
        raise ContractError("estimate_affine needs exactly three 2-D points per side")
    area2 = abs((src[1, 0] - src[0, 0]) * (src[2, 1] - src[0, 1])
                - (src[2, 0] - src[0, 0]) * (src[1, 1] - src[0, 1]))
    scale = max(np.abs(src).max(), 1.0)
    if area2 < 1e-9 * scale * scale:
        raise DegenerateGeometryError("source points are collinear")
    basis = np.hstack([src, np.ones((3, 1))])
    sol = np.linalg.solve(basis, dst)  # [3,2]: columns are (a,c),(b,d),(tx,ty) rows
    return AffineTransform(sol.T)


def warp_affine(image: np.ndarray, t: AffineTransform,
                out_size: Tuple[int, int]) -> np.ndarray:
    """Warp a [C,H,W] image by `t` via inverse mapping with bilinear sampling.

    Out-of-bounds samples clamp to the nearest edge pixel.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise DimensionError(f"expected [C,H,W] image, got shape {image.shape}")
    out_h, out_w = out_size
    inv = t.inverse().matrix
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    src_x = inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]
    src_y = inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]

    h, w = image.shape[1:]
    src_x = np.clip(src_x, 0.0, w - 1.0)
    src_y = np.clip(src_y, 0.0, h - 1.0)
    x0 = np.floor(src_x).astype(np.intp)
    y0 = np.floor(src_y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = src_x - x0
    fy = src_y - y0

    out = np.empty((image.shape[0], out_h, out_w))
    for c in range(image.shape[0]):
        plane = image[c]
        top = plane[y0, x0] * (1.0 - fx) + plane[y0, x1] * fx
        bottom = plane[y1, x0] * (1.0 - fx) + plane[y1, x1] * fx
        out[c] = top * (1.0 - fy) + bottom * fy
    return out


def rectify(image: np.ndarray, lm: LandmarkSet,
            cfg: CropConfig) -> Tuple[np.ndarray, AffineTransform]:
    """Rotate, crop, and resample a face to the standard square.

    The eye axis is brought horizontal; the crop square is centered on the
    midpoint between the eye midpoint and the mouth centroid, with side
    max(eye_to_eye_scale * eye distance, eye_to_mouth_scale * eye-to-mouth
    distance).  Returns the normalized image and the composite transform
    from original to normalized coordinates.
    """
    eye_l = lm.left_eye_center()
    eye_r = lm.right_eye_center()
    mouth = lm.mouth_center()
    eye_vec = eye_r - eye_l
    e2e = float(np.hypot(*eye_vec))
    if e2e < 1e-9:
        raise DegenerateGeometryError("eye centers coincide")
    eye_mid = 0.5 * (eye_l + eye_r)
    e2m = float(np.hypot(*(mouth - eye_mid)))
    side = max(cfg.eye_to_eye_scale * e2e, cfg.eye_to_mouth_scale * e2m)
    if side < 1e-9:
        raise DegenerateGeometryError("face landmarks are degenerate")
    center = 0.5 * (eye_mid + mouth)

    theta = math.atan2(eye_vec[1], eye_vec[0])
    cos_t, sin_t = math.cos(-theta), math.sin(-theta)
    scale = cfg.output_resolution / side
    rot = scale * np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    offset = -rot @ center + 0.5 * cfg.output_resolution
    transform = AffineTransform(np.hstack([rot, offset[:, None]]))
    normalized = warp_affine(image, transform,
                             (cfg.output_resolution, cfg.output_resolution))
    return normalized, transform


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise in (x, y-down) coords."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    if len(pts) < 3:
        raise DegenerateGeometryError("need at least 3 distinct points for a hull")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateGeometryError("points are collinear")
    return hull


def hull_mask(lm: LandmarkSet, size: Tuple[int, int]) -> np.ndarray:
    """Binary [H,W] mask: 1 on pixel centers inside (or on) the landmark hull."""
    hull = _convex_hull(lm.points)
    signed_area = 0.0
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        signed_area += ax * by - bx * ay
    if signed_area < 0.0:
        hull = hull[::-1]

    h, w = size
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    inside = np.ones((h, w), dtype=bool)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        # interior lies on the non-negative side of every edge of a CCW hull
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        inside &= cross >= -1e-9
    return inside.astype(np.float64)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    return kernel / kernel.sum()


def feather(mask: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a [H,W] mask, edge-clamped, clamped to [0,1]."""
    if sigma < 0.0:
        raise ContractError("sigma must be non-negative")
    mask = np.asarray(mask, dtype=np.float64)
    if sigma == 0.0:
        return mask.copy()
    kernel = _gaussian_kernel(sigma)
    radius = len(kernel) // 2
    padded = np.pad(mask, ((0, 0), (radius, radius)), mode="edge")
    blurred = np.apply_along_axis(
        lambda row: np.convolve(row, kernel, mode="valid"), 1, padded)
    padded = np.pad(blurred, ((radius, radius), (0, 0)), mode="edge")
    blurred = np.apply_along_axis(
        lambda col: np.convolve(col, kernel, mode="valid"), 0, padded)
    return np.clip(blurred, 0.0, 1.0)


def blend(target: np.ndarray, warped: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination; pixels with mask 0 keep the target bit-exactly."""
    target = np.asarray(target, dtype=np.float64)
    warped = np.asarray(warped, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if target.shape != warped.shape or target.shape[1:] != mask.shape:
        raise DimensionError(
            f"size mismatch: target {target.shape}, warped {warped.shape}, "
            f"mask {mask.shape}"
        )
    return target + mask[None, :, :] * (warped - target)
