"""Iterative style inference: gradient descent on the style vector of a
frozen generator to reproduce a target image.

The style starts from all zeros.  Each iteration renders, measures the
image distance, backpropagates into the style, and applies the update rule.
The best-so-far iterate (lowest recorded loss) is returned, along with the
full loss trace and any requested intermediate renders.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .autodiff import Tensor
from .errors import ContractError, DivergenceError
from .generator import Generator, StyleVector
from .perceptual import DistanceSpec, FeatureExtractor, distance

_OPTIMIZERS = ("gd", "adam")


@dataclass(frozen=True)
class InversionConfig:
    learning_rate: float = 100.0
    iterations: int = 400
    snapshot_iters: Optional[Tuple[int, ...]] = None
    optimizer: str = "gd"

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ContractError("learning_rate must be positive")
        if self.iterations < 0:
            raise ContractError("iterations must be non-negative")
        if self.optimizer not in _OPTIMIZERS:
            raise ContractError(f"optimizer must be one of {_OPTIMIZERS}")
        if self.snapshot_iters is not None:
            for it in self.snapshot_iters:
                if not 0 <= it <= self.iterations:
                    raise ContractError(f"snapshot iteration {it} outside [0, {self.iterations}]")

    @classmethod
    def reference_scale(cls) -> "InversionConfig":
        # the reference setting: plain gradient descent, lr = 1, 1000 iterations
        return cls(learning_rate=1.0, iterations=1000, optimizer="gd")


@dataclass
class InversionResult:
    style: StyleVector
    trace: List[Tuple[int, float]]
    snapshots: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    config: Optional[InversionConfig] = None

    def export_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss"])
            writer.writerows(self.trace)


def best_so_far(trace: Sequence[Tuple[int, float]]) -> Tuple[int, float]:
    """Minimum-loss trace entry; ties go to the earliest iteration."""
    if not trace:
        raise ContractError("empty trace")
    best = trace[0]
    for entry in trace[1:]:
        if entry[1] < best[1]:
            best = entry
    return best


def invert(target: np.ndarray, generator: Generator, spec: DistanceSpec,
           config: InversionConfig,
           extractor: Optional[FeatureExtractor] = None) -> InversionResult:
    cfg = generator.config
    expected = (3, cfg.output_resolution, cfg.output_resolution)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != expected:
        raise ContractError(
            f"target shape {target.shape} does not match generator output {expected}"
        )
    target_t = Tensor(target)
    snapshot_iters = set(config.snapshot_iters or ())

    s = np.zeros((cfg.layers, cfg.width))
    best_s = s.copy()
    best_loss = np.inf
    trace: List[Tuple[int, float]] = []
    snapshots: List[Tuple[int, np.ndarray]] = []

    # adam state
    m = np.zeros_like(s)
    v = np.zeros_like(s)
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8

    for it in range(config.iterations + 1):
        s_var = Tensor(s, requires_grad=True)
        image = generator.forward(s_var)
        loss_t = distance(image, target_t, spec, extractor)
        loss = float(loss_t.data)
        if not np.isfinite(loss):
            raise DivergenceError(it, trace)
        trace.append((it, loss))
        if loss < best_loss:
            best_loss = loss
            best_s = s.copy()
        if it in snapshot_iters:
            snapshots.append((it, image.data.copy()))
        if it == config.iterations:
            break
        loss_t.backward()
        grad = s_var.grad
        if config.optimizer == "gd":
            s = s - config.learning_rate * grad
        else:
            m = beta1 * m + (1.0 - beta1) * grad
            v = beta2 * v + (1.0 - beta2) * grad * grad
            t = it + 1
            m_hat = m / (1.0 - beta1 ** t)
            v_hat = v / (1.0 - beta2 ** t)
            s = s - config.learning_rate * m_hat / (np.sqrt(v_hat) + adam_eps)

    return InversionResult(style=StyleVector(best_s), trace=trace,
                           snapshots=snapshots, config=config)
