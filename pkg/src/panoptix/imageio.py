"""PNG reading and writing for images and masks."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .scene import BinaryMask, Image, SceneError, denormalize, normalize


def save_image(image: Image, path) -> None:
    PILImage.fromarray(denormalize(image), mode="RGB").save(path, format="PNG")


def load_image(path) -> Image:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    with PILImage.open(path) as im:
        raw = np.asarray(im.convert("RGB"))
    return normalize(raw)


def save_mask(mask: BinaryMask, path) -> None:
    PILImage.fromarray((mask.bits * 255).astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask(path, label: str = "") -> BinaryMask:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"mask not found: {path}")
    with PILImage.open(path) as im:
        if im.mode not in ("L", "1"):
            raise SceneError(f"mask {path}: expected 8-bit grayscale, got mode {im.mode}")
        raw = np.asarray(im.convert("L"))
    if not np.isin(raw, (0, 255)).all():
        bad = sorted(set(np.unique(raw).tolist()) - {0, 255})
        raise SceneError(f"non-binary mask {path}: pixel values {bad[:5]}")
    return BinaryMask((raw == 255).astype(np.uint8), label)


def save_strip(images: list[np.ndarray], path, gap: int = 2) -> None:
    """Write uint8 RGB tiles side by side with a white gap."""
    h = max(t.shape[0] for t in images)
    w = sum(t.shape[1] for t in images) + gap * (len(images) - 1)
    canvas = np.full((h, w, 3), 255, dtype=np.uint8)
    x = 0
    for t in images:
        canvas[: t.shape[0], x : x + t.shape[1]] = t
        x += t.shape[1] + gap
    PILImage.fromarray(canvas, mode="RGB").save(path, format="PNG")
