"""PNG image I/O mapping between 8-bit files and [0,1] float tensors."""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FileFormatError


def load_image(path) -> np.ndarray:
    """Load an 8-bit RGB PNG as a [3,H,W] float64 tensor in [0,1]."""
    try:
        with Image.open(path) as img:
            img.load()
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FileFormatError(f"cannot read image '{path}': {exc}") from exc
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return arr.transpose(2, 0, 1)


def save_image(tensor: np.ndarray, path) -> None:
    """Save a [3,H,W] tensor in [0,1] as 8-bit RGB PNG, rounding half-up."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim != 3 or tensor.shape[0] != 3:
        raise FileFormatError(f"expected [3,H,W] tensor, got shape {tensor.shape}")
    scaled = np.clip(tensor, 0.0, 1.0) * 255.0
    quantized = np.floor(scaled + 0.5).astype(np.uint8)
    Image.fromarray(quantized.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")
