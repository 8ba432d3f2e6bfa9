"""Evaluation metrics on translated images."""
from __future__ import annotations

from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .scene import BinaryMask, Image, SceneError


class ContextPreservation(NamedTuple):
    inside: float
    outside: float
    inside_empty: bool = False
    outside_empty: bool = False


def _abs_diff(x: Image, y: Image) -> np.ndarray:
    if x.shape != y.shape:
        raise SceneError(f"image shapes differ: {x.shape} vs {y.shape}")
    return np.abs(x.pixels.astype(np.float64) - y.pixels.astype(np.float64))


def context_preservation(x: Image, x_prime: Image, region: BinaryMask) -> ContextPreservation:
    """Mean absolute per-pixel difference inside and outside ``region``.

    An empty side reports 0 and sets its ``*_empty`` flag.
    """
    diff = _abs_diff(x, x_prime)
    if region.shape != x.shape:
        raise SceneError(f"mask '{region.label}': shape {region.shape} ≠ {x.shape}")
    inside = region.bits.astype(bool)
    vals = []
    for sel in (inside, ~inside):
        vals.append(float(diff[sel].mean()) if sel.any() else 0.0)
    return ContextPreservation(vals[0], vals[1], not inside.any(), inside.all())


def region_delta(x: Image, y: Image, region: BinaryMask) -> float:
    diff = _abs_diff(x, y)
    sel = region.bits.astype(bool)
    return float(diff[sel].mean()) if sel.any() else 0.0


def diversity_score(outputs: Sequence[Image], region: BinaryMask) -> float:
    """Mean over unordered pairs of the mean |difference| restricted to ``region``."""
    if len(outputs) < 2:
        raise SceneError("diversity needs at least 2 outputs")
    vals = [region_delta(a, b, region) for a, b in combinations(outputs, 2)]
    return float(np.mean(vals))


def hue(pixels: np.ndarray) -> np.ndarray:
    """HSV hue in [0, 1) of [-1, 1] RGB pixels; achromatic pixels get hue 0."""
    rgb = (np.asarray(pixels, dtype=np.float64) + 1.0) / 2.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    delta = mx - rgb.min(axis=-1)
    safe = np.where(delta > 0, delta, 1.0)
    h = np.where(mx == r, ((g - b) / safe) % 6.0,
                 np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0))
    return np.where(delta > 0, h / 6.0, 0.0)


def mean_hue(images: Sequence[Image], masks: Sequence[BinaryMask]) -> float:
    """Circular mean hue (in [0, 1)) over the masked pixels of all images."""
    angles = []
    for im, m in zip(images, masks):
        angles.append(2 * np.pi * hue(im.pixels[m.bits.astype(bool)]))
    a = np.concatenate(angles)
    return float((np.arctan2(np.sin(a).mean(), np.cos(a).mean()) / (2 * np.pi)) % 1.0)


def hue_gap(a: float, b: float) -> float:
    """Signed shortest circular difference b - a in hue units."""
    return float((b - a + 0.5) % 1.0 - 0.5)


def hue_progress(source: float, target: float, moved: float) -> float:
    """Fraction of the way ``moved`` has travelled from ``source`` toward ``target``."""
    gap = hue_gap(source, target)
    if gap == 0:
        return 1.0
    return hue_gap(source, moved) / gap
