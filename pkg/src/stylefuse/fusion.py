"""Layer-wise style fusion and the constrained 0-1 combinatorial search.

A fusion mask selects, per style layer, whether the fused vector takes its
row from the identity style or the expression style.  The search enumerates
every contiguous block of expression layers and scores each candidate by an
appearance distance to the identity image plus a weighted expression
distance to the expression image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError
from .generator import Generator, StyleVector
from .perceptual import DistanceSpec, FeatureExtractor, distance


@dataclass(frozen=True)
class FusionMask:
    """0-based layer indices whose rows come from the expression style."""

    take_from_expression: frozenset
    total_layers: int

    def __post_init__(self):
        object.__setattr__(self, "take_from_expression",
                           frozenset(self.take_from_expression))
        for i in self.take_from_expression:
            if not 0 <= i < self.total_layers:
                raise ContractError(f"layer index {i} outside [0, {self.total_layers})")

    def complement(self) -> "FusionMask":
        rest = set(range(self.total_layers)) - self.take_from_expression
        return FusionMask(frozenset(rest), self.total_layers)

    @classmethod
    def contiguous(cls, start: int, length: int, total_layers: int) -> "FusionMask":
        if length < 1 or start < 0 or start + length > total_layers:
            raise ContractError(
                f"block (start={start}, length={length}) outside {total_layers} layers"
            )
        return cls(frozenset(range(start, start + length)), total_layers)


@dataclass(frozen=True)
class FusionSearchConfig:
    lam: float = 1.0
    d1_spec: DistanceSpec = field(default_factory=lambda: DistanceSpec("l2"))
    d2_spec: DistanceSpec = field(default_factory=lambda: DistanceSpec("l2"))
    normalize_d2: bool = True
    block_lengths: Tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.lam < 0.0:
            raise ContractError("lambda weight must be non-negative")
        if not self.block_lengths:
            raise ContractError("block_lengths must be non-empty")


@dataclass
class ScoreRow:
    block_length: int
    start: int
    d1: float
    d2: float
    objective: float


def fuse(s1: StyleVector, s2: StyleVector, mask: FusionMask) -> StyleVector:
    """Row-select fusion: masked layers from s2, the rest from s1."""
    if (s1.layers, s1.width) != (s2.layers, s2.width):
        raise DimensionError(
            f"style shapes differ: {s1.values.shape} vs {s2.values.shape}"
        )
    if mask.total_layers != s1.layers:
        raise DimensionError(
            f"mask covers {mask.total_layers} layers, styles have {s1.layers}"
        )
    out = s1.values.copy()
    idx = sorted(mask.take_from_expression)
    out[idx] = s2.values[idx]
    return StyleVector(out)


def fixed_expression_mask(total_layers: int) -> FusionMask:
    """The two expression layers, scaled from the 18-layer reference positions."""
    if total_layers < 5:
        raise ContractError("need at least 5 layers for the fixed expression mask")
    a = (3 * total_layers) // 18
    b = (4 * total_layers) // 18
    if b == a:
        b = a + 1
    return FusionMask(frozenset({a, b}), total_layers)


def _candidates(total_layers: int, block_lengths: Sequence[int]):
    for length in sorted(set(block_lengths)):
        if not 1 <= length <= total_layers:
            raise ContractError(f"block length {length} outside [1, {total_layers}]")
        for start in range(total_layers - length + 1):
            yield length, start


def search(s1: StyleVector, s2: StyleVector, i1: np.ndarray, i2: np.ndarray,
           generator: Generator, cfg: FusionSearchConfig,
           extractor: Optional[FeatureExtractor] = None
           ) -> Tuple[FusionMask, float, List[ScoreRow]]:
    """Exhaustive contiguous-block search minimizing d1 + lambda * d2.

    Ties break toward the shorter block, then the smaller start.  The d2
    column of the score table holds the raw distance; when normalize_d2 is
    set the objective divides d2 by its mean over the whole enumeration.
    """
    L = s1.layers
    raw: List[Tuple[int, int, float, float]] = []
    for length, start in _candidates(L, cfg.block_lengths):
        mask = FusionMask.contiguous(start, length, L)
        img = generator.synthesize(fuse(s1, s2, mask))
        d1 = float(distance(img, i1, cfg.d1_spec, extractor).data)
        d2 = float(distance(img, i2, cfg.d2_spec, extractor).data)
        raw.append((length, start, d1, d2))

    d2_mean = float(np.mean([r[3] for r in raw]))
    d2_norm = d2_mean if (cfg.normalize_d2 and d2_mean > 0.0) else 1.0

    table: List[ScoreRow] = []
    best_row: Optional[ScoreRow] = None
    for length, start, d1, d2 in raw:
        obj = d1 + cfg.lam * (d2 / d2_norm)
        row = ScoreRow(length, start, d1, d2, obj)
        table.append(row)
        if best_row is None or obj < best_row.objective:
            best_row = row
    best_mask = FusionMask.contiguous(best_row.start, best_row.block_length, L)
    return best_mask, best_row.objective, table


def sweep(s1: StyleVector, s2: StyleVector, generator: Generator,
          lengths: Sequence[int], starts: Sequence[int]) -> List[List[np.ndarray]]:
    """Grid of regenerated images over (block length, start) replacements.

    start = -1 follows the convention of replacing the final `length` layers.
    """
    L = s1.layers
    grid: List[List[np.ndarray]] = []
    for length in lengths:
        row: List[np.ndarray] = []
        for start in starts:
            j = L - length if start == -1 else start
            if length < 1 or j < 0 or j + length > L:
                raise ContractError(
                    f"sweep cell (length={length}, start={start}) out of range for L={L}"
                )
            mask = FusionMask.contiguous(j, length, L)
            row.append(generator.synthesize(fuse(s1, s2, mask)))
        grid.append(row)
    return grid


def export_score_csv(table: Sequence[ScoreRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block_length", "start", "d1", "d2", "objective"])
        for row in table:
            writer.writerow([row.block_length, row.start, row.d1, row.d2, row.objective])
