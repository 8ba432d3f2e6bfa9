"""Images, binary masks, mask sets and translation plans.

Images are float32 arrays of shape (H, W, 3) in [-1, 1]. Masks are uint8
arrays of shape (H, W) holding only 0 and 1.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np


class SceneError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[2] != 3:
            raise SceneError(f"image must have shape (H, W, 3), got {px.shape}")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    def violations(self) -> list[str]:
        out = []
        h, w = self.shape
        if h < 8 or w < 8:
            out.append(f"image: size ({h},{w}) smaller than 8x8")
        if h % 4 or w % 4:
            out.append(f"image: size ({h},{w}) not divisible by 4")
        if not np.all(np.isfinite(self.pixels)):
            out.append("image: non-finite pixel values")
        elif self.pixels.size and (self.pixels.min() < -1 or self.pixels.max() > 1):
            out.append("image: pixel values outside [-1, 1]")
        return out

    def equals(self, other: "Image") -> bool:
        """Bit-exact comparison."""
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels.view(np.uint32), other.pixels.view(np.uint32))
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray
    label: str = ""

    def __post_init__(self):
        bits = np.array(self.bits)
        if bits.ndim != 2:
            raise SceneError(f"mask '{self.label}': must be 2-D, got shape {bits.shape}")
        if bits.dtype == bool:
            bits = bits.astype(np.uint8)
        if not np.isin(bits, (0, 1)).all():
            raise SceneError(f"mask '{self.label}': non-binary values")
        object.__setattr__(self, "bits", _frozen(bits.astype(np.uint8)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def relabel(self, label: str) -> "BinaryMask":
        return BinaryMask(self.bits, label)


@dataclass(frozen=True)
class MaskSet:
    instance_masks: tuple[BinaryMask, ...] = ()
    stuff_masks: Mapping[str, BinaryMask] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "instance_masks", tuple(self.instance_masks))
        object.__setattr__(self, "stuff_masks", dict(self.stuff_masks))

    def instances_labeled(self, label: str) -> list[int]:
        return [i for i, m in enumerate(self.instance_masks) if m.label == label]


def validate_scene(image: Image, masks: MaskSet) -> list[str]:
    """Return every invariant violation found; an empty list means valid."""
    found = image.violations()
    shape = image.shape

    named = [(m.label or f"instance {i}", m) for i, m in enumerate(masks.instance_masks)]
    named += [(label, m) for label, m in masks.stuff_masks.items()]
    for name, m in named:
        if m.shape != shape:
            found.append(f"mask '{name}': shape {_fmt(m.shape)} ≠ {_fmt(shape)}")
        elif not np.isin(m.bits, (0, 1)).all():
            found.append(f"mask '{name}': non-binary values")
    for label, m in masks.stuff_masks.items():
        if m.label and m.label != label:
            found.append(f"mask '{label}': stored under key '{label}' but labeled '{m.label}'")

    inst = masks.instance_masks
    for a, b in combinations(range(len(inst)), 2):
        if inst[a].shape == inst[b].shape and np.any(inst[a].bits & inst[b].bits):
            found.append(f"instance masks {a},{b} overlap")
    return found


def _fmt(shape) -> str:
    return "(" + ",".join(str(int(s)) for s in shape) + ")"


def mask_union(masks: Sequence[BinaryMask]) -> BinaryMask:
    if not masks:
        raise SceneError("empty mask list")
    shape = masks[0].shape
    out = np.zeros(shape, dtype=np.uint8)
    for m in masks:
        if m.shape != shape:
            raise SceneError(f"mask '{m.label}': shape {_fmt(m.shape)} ≠ {_fmt(shape)}")
        out |= m.bits
    return BinaryMask(out, "union")


def normalize(raw) -> Image:
    raw = np.asarray(raw)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise SceneError(f"raw image must have shape (H, W, 3), got {raw.shape}")
    if raw.size and (raw.min() < 0 or raw.max() > 255):
        raise SceneError("raw channel values must lie in 0..255")
    if np.issubdtype(raw.dtype, np.floating) and not np.array_equal(raw, np.round(raw)):
        raise SceneError("raw channel values must be integers")
    return Image(raw.astype(np.float64) / 127.5 - 1.0)


def denormalize(image: Image) -> np.ndarray:
    """Map [-1, 1] back to 0..255 with round-half-up and clamping."""
    v = np.floor((image.pixels.astype(np.float64) + 1.0) * 127.5 + 0.5)
    return np.clip(v, 0, 255).astype(np.uint8)


# --- translation plans -----------------------------------------------------

_RANDOM_RE = re.compile(r"^random\((-?\d+)\)$")
_REFERENCE_RE = re.compile(r"^reference\((.+)\)$")


@dataclass(frozen=True)
class StyleSource:
    kind: str  # "random" or "reference"
    seed: int | None = None
    image_path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "StyleSource":
        text = text.strip()
        if m := _RANDOM_RE.match(text):
            return cls("random", seed=int(m.group(1)))
        if m := _REFERENCE_RE.match(text):
            return cls("reference", image_path=m.group(1))
        raise SceneError(f"style_source must be random(seed) or reference(path), got {text!r}")

    def __str__(self) -> str:
        if self.kind == "random":
            return f"random({self.seed})"
        return f"reference({self.image_path})"


@dataclass(frozen=True)
class ThingStep:
    source_label: str
    target_label: str
    tra_bundle_id: str


@dataclass(frozen=True)
class StuffStep:
    source_label: str
    target_domain_id: str
    sra_bundle_id: str
    style_source: StyleSource


@dataclass(frozen=True)
class TranslationPlan:
    thing_steps: tuple[ThingStep, ...] = ()
    stuff_steps: tuple[StuffStep, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "thing_steps", tuple(self.thing_steps))
        object.__setattr__(self, "stuff_steps", tuple(self.stuff_steps))

    @property
    def K(self) -> int:
        return len(self.thing_steps)

    @property
    def L(self) -> int:
        return len(self.stuff_steps)

    @property
    def M(self) -> int:
        return self.K + self.L

    @property
    def A(self) -> int:
        return len({s.target_domain_id for s in self.stuff_steps})

    def to_dict(self) -> dict:
        return {
            "thing_steps": [
                {"source_label": s.source_label, "target_label": s.target_label,
                 "tra_bundle_id": s.tra_bundle_id}
                for s in self.thing_steps
            ],
            "stuff_steps": [
                {"source_label": s.source_label, "target_domain_id": s.target_domain_id,
                 "sra_bundle_id": s.sra_bundle_id, "style_source": str(s.style_source)}
                for s in self.stuff_steps
            ],
            "A": self.A,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TranslationPlan":
        try:
            things = [ThingStep(s["source_label"], s["target_label"], s["tra_bundle_id"])
                      for s in d.get("thing_steps", [])]
            stuff = [StuffStep(s["source_label"], s["target_domain_id"], s["sra_bundle_id"],
                               StyleSource.parse(s["style_source"]))
                     for s in d.get("stuff_steps", [])]
        except (KeyError, TypeError) as exc:
            raise SceneError(f"malformed plan: {exc!r}") from exc
        plan = cls(things, stuff)
        if "A" in d and int(d["A"]) != plan.A:
            raise SceneError(f"plan declares A={d['A']} but stuff steps use {plan.A} target domains")
        return plan
