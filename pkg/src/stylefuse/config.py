"""Flat key=value configuration files for the pipeline and CLI.

Lines are `key = value`; blank lines and lines starting with `#` are
ignored.  CLI flags override file values.
"""

from __future__ import annotations

from typing import Dict, Optional

from .errors import ContractError
from .fusion import FusionSearchConfig
from .generator import GeneratorConfig
from .geometry import CropConfig
from .inversion import InversionConfig
from .perceptual import DistanceSpec
from .pipeline import PipelineConfig

_KNOWN_KEYS = {
    "layers", "width", "base_resolution", "output_resolution", "channels",
    "noise_seed", "weight_seed", "weights_path", "distance", "tap_depth",
    "extractor_seed", "extractor_stages", "learning_rate", "iterations",
    "optimizer", "fusion_mode", "lambda", "block_lengths", "normalize_d2",
    "eye_to_eye_scale", "eye_to_mouth_scale", "feather_sigma",
}


def parse_config_file(path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ContractError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _KNOWN_KEYS:
                raise ContractError(f"{path}:{lineno}: unknown key '{key}'")
            values[key] = value.strip()
    return values


def _get(values, key, cast, default):
    if key not in values:
        return default
    raw = values[key]
    if cast is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    return cast(raw)


def build_pipeline_config(values: Dict[str, str],
                          keep_stages: Optional[str] = None) -> PipelineConfig:
    defaults = GeneratorConfig()
    layers = _get(values, "layers", int, defaults.layers)
    width = _get(values, "width", int, defaults.width)
    base = _get(values, "base_resolution", int, defaults.base_resolution)
    out_res = _get(values, "output_resolution", int, defaults.output_resolution)
    if "channels" in values:
        channels = tuple(int(c) for c in values["channels"].split(","))
    elif (layers, base) == (defaults.layers, defaults.base_resolution):
        channels = defaults.channels
    else:
        stages = layers // 2
        channels = tuple(max(128 // 2 ** k, 8) for k in range(stages))
    gen_cfg = GeneratorConfig(layers=layers, width=width, base_resolution=base,
                              output_resolution=out_res, channels=channels,
                              noise_seed=_get(values, "noise_seed", int, 0))

    kind = _get(values, "distance", str, "l2")
    tap = _get(values, "tap_depth", int, None)
    spec = DistanceSpec(kind, tap if kind == "feature" else None)

    inv_cfg = InversionConfig(
        learning_rate=_get(values, "learning_rate", float, InversionConfig().learning_rate),
        iterations=_get(values, "iterations", int, InversionConfig().iterations),
        optimizer=_get(values, "optimizer", str, InversionConfig().optimizer),
    )

    search_cfg = FusionSearchConfig(
        lam=_get(values, "lambda", float, 1.0),
        d1_spec=spec,
        d2_spec=spec,
        normalize_d2=_get(values, "normalize_d2", bool, True),
        block_lengths=tuple(int(b) for b in values["block_lengths"].split(","))
        if "block_lengths" in values else (1, 2, 3),
    )

    crop_cfg = CropConfig(
        eye_to_eye_scale=_get(values, "eye_to_eye_scale", float, 4.0),
        eye_to_mouth_scale=_get(values, "eye_to_mouth_scale", float, 3.6),
        output_resolution=out_res,
    )

    return PipelineConfig(
        generator=gen_cfg,
        weight_seed=_get(values, "weight_seed", int, 11),
        weights_path=_get(values, "weights_path", str, None),
        distance=spec,
        extractor_seed=_get(values, "extractor_seed", int, 5),
        extractor_stages=_get(values, "extractor_stages", int, 4),
        inversion=inv_cfg,
        fusion_mode=_get(values, "fusion_mode", str, "fixed"),
        search=search_cfg,
        crop=crop_cfg,
        feather_sigma=_get(values, "feather_sigma", float, None),
        keep_stages=keep_stages,
    )
