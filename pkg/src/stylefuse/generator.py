"""Miniature style-based generator with frozen weights.

A mapping network turns an input noise vector into a layered style vector;
the synthesis network grows an image from a learned constant, modulating
each convolution block through adaptive instance normalization driven by
one style row per block.  Two style rows are consumed per resolution stage,
so a generator with S stages exposes L = 2*S style layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import ntws
from .autodiff import Tensor, adain, conv2d, leaky_relu, upsample2x
from .errors import ContractError, WeightLoadError

MAPPING_DEPTH = 3
LEAKY_SLOPE = 0.2
ADAIN_EPS = 1e-8


@dataclass
class StyleVector:
    """L x D layered latent controlling the synthesis network."""

    values: np.ndarray  # [L, D]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractError(f"style vector must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] < 2 or self.values.shape[1] < 1:
            raise ContractError(f"style vector needs L>=2, D>=1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("style vector contains non-finite values")

    @property
    def layers(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GeneratorConfig:
    layers: int = 8
    width: int = 64
    base_resolution: int = 8
    output_resolution: int = 64
    channels: tuple = (128, 64, 32, 16)
    noise_seed: int = 0

    def __post_init__(self):
        stages = self.layers // 2
        if self.layers != 2 * stages:
            raise ContractError("layer count must be even (two style layers per stage)")
        if self.output_resolution != self.base_resolution * 2 ** (stages - 1):
            raise ContractError(
                f"output_resolution {self.output_resolution} != "
                f"base {self.base_resolution} * 2^{stages - 1}"
            )
        if len(self.channels) != stages:
            raise ContractError(
                f"need one channel count per stage ({stages}), got {len(self.channels)}"
            )

    @property
    def stages(self) -> int:
        return self.layers // 2

    @classmethod
    def reference_scale(cls) -> "GeneratorConfig":
        # 18 style layers, 512-wide, 4x4 base growing to 1024x1024
        channels = tuple(max(512 // 2 ** k, 16) for k in range(9))
        return cls(layers=18, width=512, base_resolution=4,
                   output_resolution=1024, channels=channels)


class WeightStore:
    """Frozen name -> array container for generator / extractor parameters."""

    def __init__(self, entries: Dict[str, np.ndarray]):
        self._entries = {
            name: np.asarray(arr, dtype=np.float64) for name, arr in entries.items()
        }
        for arr in self._entries.values():
            arr.setflags(write=False)

    def __contains__(self, name):
        return name in self._entries

    def names(self) -> List[str]:
        return sorted(self._entries)

    def get(self, name: str) -> np.ndarray:
        try:
            return self._entries[name]
        except KeyError:
            raise WeightLoadError(f"missing weight entry '{name}'") from None

    def tensor(self, name: str) -> Tensor:
        return Tensor(self.get(name))

    def save(self, path) -> None:
        ntws.save_weights(self._entries, path)

    @classmethod
    def load(cls, path) -> "WeightStore":
        return cls(ntws.load_weights(path))


class NoiseBank:
    """Per-block single-channel noise images, a pure function of (seed, config)."""

    def __init__(self, config: GeneratorConfig, seed: Optional[int] = None):
        rng = np.random.default_rng(config.noise_seed if seed is None else seed)
        self.images: List[np.ndarray] = []
        res = config.base_resolution
        for stage in range(config.stages):
            for _ in range(2):
                img = rng.standard_normal((res, res))
                img.setflags(write=False)
                self.images.append(img)
            res *= 2


def _weight_names(config: GeneratorConfig) -> Dict[str, tuple]:
    """Every entry the synthesis + mapping networks require, with shapes."""
    names = {"const": (config.channels[0], config.base_resolution, config.base_resolution)}
    for j in range(MAPPING_DEPTH):
        names[f"mapping.{j}.weight"] = (config.width, config.width)
        names[f"mapping.{j}.bias"] = (config.width,)
    for stage in range(config.stages):
        cin = config.channels[max(stage - 1, 0)]
        cout = config.channels[stage]
        names[f"stage{stage}.conv0.kernel"] = (cout, cin, 3, 3)
        names[f"stage{stage}.conv0.bias"] = (cout,)
        names[f"stage{stage}.conv1.kernel"] = (cout, cout, 3, 3)
        names[f"stage{stage}.conv1.bias"] = (cout,)
        for half in range(2):
            layer = 2 * stage + half
            names[f"layer{layer}.noise_scale"] = (cout,)
            names[f"layer{layer}.style_scale.weight"] = (cout, config.width)
            names[f"layer{layer}.style_scale.bias"] = (cout,)
            names[f"layer{layer}.style_shift.weight"] = (cout, config.width)
            names[f"layer{layer}.style_shift.bias"] = (cout,)
    names["to_rgb.kernel"] = (3, config.channels[-1], 1, 1)
    names["to_rgb.bias"] = (3,)
    return names


def init_random_weights(config: GeneratorConfig, seed: int) -> WeightStore:
    """Seeded fan-in-scaled Gaussian initialization; biases zero."""
    rng = np.random.default_rng(seed)
    entries = {}
    for name, shape in _weight_names(config).items():
        if name.endswith(".bias"):
            entries[name] = np.zeros(shape)
        elif name.endswith("noise_scale"):
            entries[name] = 0.1 * rng.standard_normal(shape)
        elif name == "const":
            entries[name] = rng.standard_normal(shape)
        else:
            fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
            # style affine maps get a softer gain: full-strength modulation
            # makes the inversion landscape needlessly hostile
            gain = 0.5 if ".style_" in name else 1.0
            entries[name] = gain * rng.standard_normal(shape) / np.sqrt(fan_in)
    return WeightStore(entries)


class Generator:
    """Frozen mapping + synthesis networks bound to a config and noise bank."""

    def __init__(self, config: GeneratorConfig, weights: WeightStore,
                 noise: Optional[NoiseBank] = None):
        self.config = config
        self.weights = weights
        self.noise = noise or NoiseBank(config)
        for name, shape in _weight_names(config).items():
            arr = weights.get(name)
            if arr.shape != shape:
                raise WeightLoadError(
                    f"weight '{name}' has shape {arr.shape}, expected {shape}"
                )

    # -- mapping network f ---------------------------------------------------

    def map_latent(self, z: np.ndarray) -> StyleVector:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.config.width,):
            raise ContractError(f"latent must have shape ({self.config.width},)")
        if not np.all(np.isfinite(z)):
            raise ContractError("latent contains non-finite values")
        h = z
        for j in range(MAPPING_DEPTH):
            w = self.weights.get(f"mapping.{j}.weight")
            b = self.weights.get(f"mapping.{j}.bias")
            h = w @ h + b
            h = np.where(h >= 0.0, h, LEAKY_SLOPE * h)
        return StyleVector(np.tile(h, (self.config.layers, 1)))

    # -- synthesis network g -------------------------------------------------

    def forward(self, s: Tensor) -> Tensor:
        """Differentiable synthesis of a [3,H,W] image in (0,1) from an [L,D] style."""
        cfg = self.config
        if s.shape != (cfg.layers, cfg.width):
            raise ContractError(
                f"style shape {s.shape} does not match config ({cfg.layers}, {cfg.width})"
            )
        w = self.weights
        x = w.tensor("const")
        layer = 0
        for stage in range(cfg.stages):
            if stage > 0:
                x = upsample2x(x)
            for half in range(2):
                kernel = w.tensor(f"stage{stage}.conv{half}.kernel")
                bias = w.tensor(f"stage{stage}.conv{half}.bias")
                x = conv2d(x, kernel, bias, pad=1)
                noise_scale = w.get(f"layer{layer}.noise_scale")
                noise_img = self.noise.images[layer]
                x = x + Tensor(noise_scale[:, None, None] * noise_img[None, :, :])
                x = leaky_relu(x, LEAKY_SLOPE)
                style_row = _row(s, layer)
                scale = w.tensor(f"layer{layer}.style_scale.weight") @ style_row \
                    + w.tensor(f"layer{layer}.style_scale.bias") + 1.0
                shift = w.tensor(f"layer{layer}.style_shift.weight") @ style_row \
                    + w.tensor(f"layer{layer}.style_shift.bias")
                x = adain(x, scale, shift, ADAIN_EPS)
                layer += 1
        x = conv2d(x, w.tensor("to_rgb.kernel"), w.tensor("to_rgb.bias"), pad=0)
        return x.sigmoid()

    def synthesize(self, style: StyleVector) -> np.ndarray:
        """Render an image from a style vector; pure and deterministic."""
        if (style.layers, style.width) != (self.config.layers, self.config.width):
            raise ContractError(
                f"style is {style.layers}x{style.width}, generator expects "
                f"{self.config.layers}x{self.config.width}"
            )
        return self.forward(Tensor(style.values)).data


def _row(s: Tensor, i: int) -> Tensor:
    """Differentiable row extraction from an [L,D] tensor."""

    def backward(g):
        if s.requires_grad:
            full = np.zeros_like(s.data)
            full[i] = g
            s._accumulate(full)

    return Tensor._result(s.data[i].copy(), (s,), backward)
