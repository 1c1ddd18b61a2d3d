"""End-to-end expression transfer: normalize both faces, invert both styles,
fuse, regenerate, then warp and blend the regenerated face back into the
original identity image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from . import ntws
from .errors import ContractError, StyleFuseError
from .fusion import (FusionMask, FusionSearchConfig, export_score_csv,
                     fixed_expression_mask, fuse, search)
from .generator import Generator, GeneratorConfig, StyleVector, WeightStore, init_random_weights
from .geometry import (CropConfig, LandmarkSet, blend, estimate_affine, feather,
                       hull_mask, rectify, warp_affine)
from .imageio import load_image, save_image
from .inversion import InversionConfig, invert
from .perceptual import DistanceSpec, FeatureExtractor, build_extractor

STYLE_ENTRY = "style"


class PipelineError(StyleFuseError):
    """Stage failure, carrying the stage name and job id."""

    def __init__(self, stage: str, job_id: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed for job '{job_id}': {cause}")
        self.stage = stage
        self.job_id = job_id
        self.cause = cause


@dataclass
class TransferJob:
    identity_image: str
    expression_image: str
    identity_landmarks: str
    expression_landmarks: str
    output_path: str

    @property
    def job_id(self) -> str:
        return os.path.basename(self.identity_image) + "+" + \
            os.path.basename(self.expression_image)

    def input_paths(self):
        return [self.identity_image, self.expression_image,
                self.identity_landmarks, self.expression_landmarks]


@dataclass
class PipelineConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    weight_seed: int = 11
    weights_path: Optional[str] = None
    distance: DistanceSpec = field(default_factory=lambda: DistanceSpec("l2"))
    extractor_seed: int = 5
    extractor_stages: int = 4
    inversion: InversionConfig = field(default_factory=InversionConfig)
    fusion_mode: str = "fixed"  # fixed | search
    search: FusionSearchConfig = field(default_factory=FusionSearchConfig)
    crop: CropConfig = field(default_factory=CropConfig)
    feather_sigma: Optional[float] = None  # default: 3% of the crop width
    keep_stages: Optional[str] = None

    def __post_init__(self):
        if self.fusion_mode not in ("fixed", "search"):
            raise ContractError(f"fusion_mode must be fixed|search, got {self.fusion_mode!r}")
        if self.generator.output_resolution != self.crop.output_resolution:
            raise ContractError(
                f"crop resolution {self.crop.output_resolution} must match generator "
                f"output {self.generator.output_resolution}"
            )

    def effective_feather_sigma(self) -> float:
        if self.feather_sigma is not None:
            return self.feather_sigma
        return 0.03 * self.crop.output_resolution

    def build_generator(self) -> Generator:
        if self.weights_path:
            weights = WeightStore.load(self.weights_path)
        else:
            weights = init_random_weights(self.generator, self.weight_seed)
        return Generator(self.generator, weights)

    def build_extractor(self) -> Optional[FeatureExtractor]:
        if self.distance.kind != "feature":
            return None
        return build_extractor(self.extractor_seed, self.extractor_stages,
                               self.distance.tap_depth)


def save_style(style: StyleVector, path) -> None:
    ntws.save_weights({STYLE_ENTRY: style.values}, path)


def load_style(path) -> StyleVector:
    entries = ntws.load_weights(path)
    if STYLE_ENTRY not in entries:
        raise ContractError(f"{path}: no '{STYLE_ENTRY}' entry")
    return StyleVector(entries[STYLE_ENTRY])


@dataclass
class TransferResult:
    composite: np.ndarray
    fused_style: StyleVector
    mask: FusionMask
    identity_style: StyleVector
    expression_style: StyleVector
    stages: Dict[str, np.ndarray] = field(default_factory=dict)


def run_transfer(job: TransferJob, cfg: PipelineConfig) -> TransferResult:
    for path in job.input_paths():
        if not os.path.exists(path):
            raise PipelineError("inputs", job.job_id,
                                FileNotFoundError(f"missing input file: {path}"))

    keep = cfg.keep_stages
    if keep:
        os.makedirs(keep, exist_ok=True)

    def stage(name):
        class _Ctx:
            def __enter__(self_inner):
                return None

            def __exit__(self_inner, exc_type, exc, tb):
                if exc is not None and not isinstance(exc, PipelineError):
                    raise PipelineError(name, job.job_id, exc) from exc
                return False

        return _Ctx()

    with stage("load"):
        identity = load_image(job.identity_image)
        expression = load_image(job.expression_image)
        lm1 = LandmarkSet.load_json(job.identity_landmarks)
        lm2 = LandmarkSet.load_json(job.expression_landmarks)
        generator = cfg.build_generator()
        extractor = cfg.build_extractor()

    with stage("normalize"):
        norm1, t1 = rectify(identity, lm1, cfg.crop)
        norm2, t2 = rectify(expression, lm2, cfg.crop)
        if keep:
            save_image(norm1, os.path.join(keep, "rectified_identity.png"))
            save_image(norm2, os.path.join(keep, "rectified_expression.png"))

    with stage("invert"):
        res1 = invert(norm1, generator, cfg.distance, cfg.inversion, extractor)
        res2 = invert(norm2, generator, cfg.distance, cfg.inversion, extractor)
        if keep:
            save_style(res1.style, os.path.join(keep, "identity_style.ntws"))
            save_style(res2.style, os.path.join(keep, "expression_style.ntws"))
            res1.export_trace_csv(os.path.join(keep, "identity_trace.csv"))
            res2.export_trace_csv(os.path.join(keep, "expression_trace.csv"))

    with stage("fuse"):
        if cfg.fusion_mode == "fixed":
            mask = fixed_expression_mask(cfg.generator.layers)
        else:
            mask, _, table = search(res1.style, res2.style, norm1, norm2,
                                    generator, cfg.search, extractor)
            if keep:
                export_score_csv(table, os.path.join(keep, "search_scores.csv"))
        fused_style = fuse(res1.style, res2.style, mask)
        regenerated = generator.synthesize(fused_style)
        if keep:
            save_style(fused_style, os.path.join(keep, "fused_style.ntws"))
            save_image(regenerated, os.path.join(keep, "regenerated.png"))

    with stage("composite"):
        # the regenerated face lives in the normalized identity frame, so its
        # landmarks are the rectified identity landmarks
        norm_lm1 = lm1.transformed(t1, cfg.crop.output_resolution,
                                   cfg.crop.output_resolution)
        back = estimate_affine(norm_lm1.anchor_triplet(), lm1.anchor_triplet())
        warped = warp_affine(regenerated, back, identity.shape[1:])
        face_mask = hull_mask(lm1, identity.shape[1:])
        soft_mask = feather(face_mask, cfg.effective_feather_sigma())
        composite = blend(identity, warped, soft_mask)
        if keep:
            save_image(warped, os.path.join(keep, "warped.png"))
            save_image(np.repeat(soft_mask[None], 3, axis=0),
                       os.path.join(keep, "mask.png"))

    with stage("write"):
        out_dir = os.path.dirname(os.path.abspath(job.output_path))
        os.makedirs(out_dir, exist_ok=True)
        save_image(composite, job.output_path)

    return TransferResult(
        composite=composite,
        fused_style=fused_style,
        mask=mask,
        identity_style=res1.style,
        expression_style=res2.style,
        stages={"rectified_identity": norm1, "rectified_expression": norm2,
                "regenerated": regenerated, "warped": warped, "mask": soft_mask},
    )
