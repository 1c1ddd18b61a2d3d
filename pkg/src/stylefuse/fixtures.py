"""Synthetic test fixtures: generator-rendered "faces" embedded in larger
canvases with consistent 68-point landmarks, so end-to-end runs never need
real photographs or a landmark detector.
"""

from __future__ import annotations

import os
from typing import Tuple

import numpy as np

from .generator import Generator, GeneratorConfig, StyleVector, init_random_weights
from .geometry import LandmarkSet
from .imageio import save_image


def face_landmark_template(res: int) -> LandmarkSet:
    """A face-shaped 68-point layout in normalized crop coordinates.

    Eye centers sit at (0.375, 0.375) and (0.625, 0.375) of the crop and the
    mouth centroid at (0.5, 0.625), so rectifying with the default crop
    scales maps the template onto itself.
    """
    r = float(res)
    pts = np.zeros((68, 2))

    # jaw 0-16: lower half of an ellipse, left to right
    angles = np.linspace(np.pi, 2.0 * np.pi, 17)
    pts[0:17, 0] = 0.5 * r + 0.30 * r * np.cos(angles + np.pi)
    pts[0:17, 1] = 0.45 * r + 0.38 * r * np.abs(np.sin(angles))

    # brows 17-21 and 22-26: shallow arcs above each eye
    xs = np.linspace(-0.10, 0.10, 5)
    pts[17:22, 0] = 0.375 * r + xs * r
    pts[17:22, 1] = 0.28 * r - 0.02 * r * np.cos(xs / 0.10 * np.pi / 2.0)
    pts[22:27, 0] = 0.625 * r + xs * r
    pts[22:27, 1] = 0.28 * r - 0.02 * r * np.cos(xs / 0.10 * np.pi / 2.0)

    # nose 27-35: bridge then nostril line
    pts[27:31, 0] = 0.5 * r
    pts[27:31, 1] = np.linspace(0.38, 0.50, 4) * r
    pts[31:36, 0] = np.linspace(0.44, 0.56, 5) * r
    pts[31:36, 1] = 0.53 * r

    # eyes 36-41 / 42-47: regular hexagons, so the centroid is exact
    hex_angles = np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False)
    for base, cx in ((36, 0.375), (42, 0.625)):
        pts[base:base + 6, 0] = cx * r + 0.045 * r * np.cos(hex_angles)
        pts[base:base + 6, 1] = 0.375 * r + 0.028 * r * np.sin(hex_angles)

    # mouth 48-67: 20 equally spaced points on an ellipse, centroid exact
    mouth_angles = np.linspace(0.0, 2.0 * np.pi, 20, endpoint=False)
    pts[48:68, 0] = 0.5 * r + 0.10 * r * np.cos(mouth_angles)
    pts[48:68, 1] = 0.625 * r + 0.05 * r * np.sin(mouth_angles)

    return LandmarkSet(pts, res, res)


def embed_face(face: np.ndarray, canvas_size: int, offset: Tuple[int, int],
               background: float = 0.5) -> Tuple[np.ndarray, LandmarkSet]:
    """Paste a [3,r,r] face at an integer offset on a constant canvas."""
    r = face.shape[1]
    ox, oy = offset
    if ox < 0 or oy < 0 or ox + r > canvas_size or oy + r > canvas_size:
        raise ValueError(f"face at {offset} does not fit a {canvas_size} canvas")
    canvas = np.full((3, canvas_size, canvas_size), background)
    canvas[:, oy:oy + r, ox:ox + r] = face
    template = face_landmark_template(r)
    points = template.points + np.array([ox, oy], dtype=np.float64)
    return canvas, LandmarkSet(points, canvas_size, canvas_size)


def sample_style(config: GeneratorConfig, seed: int) -> StyleVector:
    """Random layered style with independent rows."""
    rng = np.random.default_rng(seed)
    return StyleVector(rng.standard_normal((config.layers, config.width)))


def write_fixture_pair(out_dir, config: GeneratorConfig = None, weight_seed: int = 11,
                       identity_seed: int = 101, expression_seed: int = 202,
                       canvas_size: int = 160) -> dict:
    """Render two faces from known latents and write the standard fixture files.

    Returns a dict of paths plus the ground-truth styles, for tests that
    need the underlying latents.
    """
    config = config or GeneratorConfig()
    weights = init_random_weights(config, weight_seed)
    gen = Generator(config, weights)
    s1 = sample_style(config, identity_seed)
    s2 = sample_style(config, expression_seed)

    face1 = gen.synthesize(s1)
    face2 = gen.synthesize(s2)
    canvas1, lm1 = embed_face(face1, canvas_size, (48, 48))
    canvas2, lm2 = embed_face(face2, canvas_size, (40, 56))

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "identity": os.path.join(out_dir, "identity.png"),
        "expression": os.path.join(out_dir, "expression.png"),
        "identity_landmarks": os.path.join(out_dir, "identity_landmarks.json"),
        "expression_landmarks": os.path.join(out_dir, "expression_landmarks.json"),
        "weights": os.path.join(out_dir, "generator.ntws"),
    }
    save_image(canvas1, paths["identity"])
    save_image(canvas2, paths["expression"])
    lm1.save_json(paths["identity_landmarks"])
    lm2.save_json(paths["expression_landmarks"])
    weights.save(paths["weights"])
    paths["style1"] = s1
    paths["style2"] = s2
    paths["config"] = config
    return paths
