"""Facial expression transfer via style-vector inversion and layer fusion."""

from .autodiff import Tensor, adain, conv2d, grad_check, leaky_relu, upsample2x
from .fusion import FusionMask, FusionSearchConfig, fixed_expression_mask, fuse, search, sweep
from .generator import (Generator, GeneratorConfig, NoiseBank, StyleVector,
                        WeightStore, init_random_weights)
from .geometry import (AffineTransform, CropConfig, LandmarkSet, blend,
                       estimate_affine, feather, hull_mask, rectify, warp_affine)
from .inversion import InversionConfig, InversionResult, best_so_far, invert
from .metrics import MetricReport, evaluate_pair, l1_error, l2_error, ssim
from .perceptual import DistanceSpec, FeatureExtractor, build_extractor, distance
from .pipeline import PipelineConfig, TransferJob, run_transfer

__version__ = "0.1.0"
