"""Differentiable image distances: pixel-space l1/l2 and a convolutional
feature-space distance with selectable tap depth.

The feature extractor is a frozen stack of stride-2 convolution blocks with
seeded random weights; converted real weights load through the same NTWS
container the generator uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ntws
from .autodiff import Tensor, conv2d, downsample2x, leaky_relu
from .errors import ContractError, DimensionError

_KINDS = ("l1", "l2", "feature")


@dataclass(frozen=True)
class DistanceSpec:
    kind: str = "l2"
    tap_depth: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ContractError(f"distance kind must be one of {_KINDS}, got {self.kind!r}")


class FeatureExtractor:
    """Frozen conv stack; stage k halves resolution and widens channels."""

    def __init__(self, kernels, biases, tap_depth: Optional[int] = None):
        self.kernels = [np.asarray(k, dtype=np.float64) for k in kernels]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if len(self.kernels) != len(self.biases) or not self.kernels:
            raise ContractError("extractor needs matching non-empty kernel/bias lists")
        for arr in self.kernels + self.biases:
            arr.setflags(write=False)
        self.tap_depth = tap_depth if tap_depth is not None else self.default_tap()
        if not 1 <= self.tap_depth <= len(self.kernels):
            raise ContractError(
                f"tap_depth {self.tap_depth} outside [1, {len(self.kernels)}]"
            )

    @property
    def stages(self) -> int:
        return len(self.kernels)

    def default_tap(self) -> int:
        # middle stage, rounded up
        return (len(self.kernels) + 1) // 2

    def features(self, x: Tensor, tap_depth: Optional[int] = None) -> Tensor:
        depth = tap_depth or self.tap_depth
        for k in range(depth):
            x = conv2d(x, Tensor(self.kernels[k]), Tensor(self.biases[k]), pad=1)
            x = downsample2x(x)
            x = leaky_relu(x, 0.2)
        return x

    def save(self, path) -> None:
        entries = {}
        for k, (kern, bias) in enumerate(zip(self.kernels, self.biases)):
            entries[f"stage{k}.kernel"] = kern
            entries[f"stage{k}.bias"] = bias
        ntws.save_weights(entries, path)

    @classmethod
    def load(cls, path, tap_depth: Optional[int] = None) -> "FeatureExtractor":
        entries = ntws.load_weights(path)
        kernels, biases = [], []
        k = 0
        while f"stage{k}.kernel" in entries:
            kernels.append(entries[f"stage{k}.kernel"])
            biases.append(entries[f"stage{k}.bias"])
            k += 1
        return cls(kernels, biases, tap_depth)


def build_extractor(seed: int, stages: int, tap_depth: Optional[int] = None) -> FeatureExtractor:
    """Seeded random extractor: 3 -> 16 -> 32 -> ... channels, 3x3 kernels."""
    if stages < 1:
        raise ContractError("need at least one stage")
    rng = np.random.default_rng(seed)
    kernels, biases = [], []
    cin = 3
    cout = 16
    for _ in range(stages):
        fan_in = cin * 9
        kernels.append(rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(fan_in))
        biases.append(np.zeros(cout))
        cin, cout = cout, cout * 2
    return FeatureExtractor(kernels, biases, tap_depth)


def distance(a: Tensor, b: Tensor, spec: DistanceSpec,
             extractor: Optional[FeatureExtractor] = None) -> Tensor:
    """Non-negative scalar distance, differentiable w.r.t. `a`."""
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = b if isinstance(b, Tensor) else Tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    if spec.kind == "l1":
        return (a - b).abs().mean()
    if spec.kind == "l2":
        diff = a - b
        return (diff * diff).mean()
    if extractor is None:
        raise ContractError("feature distance requires an extractor")
    fa = extractor.features(a, spec.tap_depth)
    fb = extractor.features(b, spec.tap_depth)
    diff = fa - fb
    return (diff * diff).mean()
