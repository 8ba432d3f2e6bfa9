import colorsys
from itertools import combinations

import numpy as np
import pytest

from panoptix.metrics import (
    context_preservation,
    diversity_score,
    hue,
    hue_gap,
    hue_progress,
    mean_hue,
)
from panoptix.scene import BinaryMask, Image, SceneError


def test_identical_images():
    x = Image(np.zeros((8, 8, 3)))
    m = BinaryMask(np.eye(8))
    cp = context_preservation(x, x, m)
    assert (cp.inside, cp.outside) == (0.0, 0.0)


def test_change_only_inside():
    x = Image(np.zeros((8, 8, 3)))
    bits = np.zeros((8, 8), np.uint8)
    bits[2:5, 2:5] = 1
    y = Image(np.repeat(np.where(bits == 1, 0.5, 0.0)[..., None], 3, axis=2))
    cp = context_preservation(x, y, BinaryMask(bits))
    assert cp.inside == pytest.approx(0.5) and cp.outside == 0.0


def test_empty_region_flagged():
    x = Image(np.zeros((8, 8, 3)))
    cp = context_preservation(x, Image(np.full((8, 8, 3), 0.25)), BinaryMask(np.zeros((8, 8))))
    assert cp.inside == 0.0 and cp.inside_empty and cp.outside == pytest.approx(0.25)


def test_context_against_loop():
    rng = np.random.default_rng(0)
    x = Image(rng.uniform(-1, 1, (8, 8, 3)))
    y = Image(rng.uniform(-1, 1, (8, 8, 3)))
    m = BinaryMask(rng.integers(0, 2, (8, 8)))
    sums, counts = [0.0, 0.0], [0, 0]
    for r in range(8):
        for c in range(8):
            side = 0 if m.bits[r, c] else 1
            for ch in range(3):
                sums[side] += abs(float(x.pixels[r, c, ch]) - float(y.pixels[r, c, ch]))
                counts[side] += 1
    cp = context_preservation(x, y, m)
    assert cp.inside == pytest.approx(sums[0] / counts[0], abs=1e-7)
    assert cp.outside == pytest.approx(sums[1] / counts[1], abs=1e-7)


def test_context_shape_mismatch():
    with pytest.raises(SceneError):
        context_preservation(Image(np.zeros((8, 8, 3))), Image(np.zeros((12, 12, 3))),
                             BinaryMask(np.zeros((8, 8))))


def test_diversity_trivial():
    x = Image(np.zeros((8, 8, 3)))
    region = BinaryMask(np.ones((8, 8)))
    assert diversity_score([x, x], region) == 0.0
    assert diversity_score([x, Image(np.full((8, 8, 3), 0.1))], region) == pytest.approx(0.1)
    with pytest.raises(SceneError):
        diversity_score([x], region)


def test_diversity_against_pair_loop():
    rng = np.random.default_rng(1)
    imgs = [Image(rng.uniform(-1, 1, (8, 8, 3))) for _ in range(4)]
    region = BinaryMask(rng.integers(0, 2, (8, 8)))
    vals = []
    for a, b in combinations(range(4), 2):
        tot, n = 0.0, 0
        for r in range(8):
            for c in range(8):
                if region.bits[r, c]:
                    for ch in range(3):
                        tot += abs(float(imgs[a].pixels[r, c, ch]) - float(imgs[b].pixels[r, c, ch]))
                        n += 1
        vals.append(tot / n)
    assert diversity_score(imgs, region) == pytest.approx(sum(vals) / len(vals), abs=1e-7)


def test_hue_matches_colorsys():
    rng = np.random.default_rng(2)
    px = rng.uniform(-1, 1, (50, 3))
    ours = hue(px)
    for p, h in zip(px, ours):
        r, g, b = (p + 1) / 2
        assert h == pytest.approx(colorsys.rgb_to_hsv(r, g, b)[0], abs=1e-9)


def test_circular_hue_helpers():
    assert hue_gap(0.95, 0.05) == pytest.approx(0.1)
    assert hue_progress(0.6, 0.1, 0.35) == pytest.approx(0.5)
    red_lo = Image(np.tile(np.array([1.0, -1.0, -0.95]), (8, 8, 1)))  # hue just below 1
    red_hi = Image(np.tile(np.array([1.0, -0.95, -1.0]), (8, 8, 1)))  # hue just above 0
    m = BinaryMask(np.ones((8, 8)))
    h = mean_hue([red_lo, red_hi], [m, m])
    assert min(h, 1 - h) < 1e-6
