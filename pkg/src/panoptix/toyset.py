"""Procedural two-domain scenes with exact panoptic annotations.

Domain A: blue sky over gray ground with red squares ("boxthing").
Domain B: orange sky over green ground with white discs ("blobthing").
Every pixel belongs to exactly one of sky, ground or a single instance.
"""
from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imageio import load_image, load_mask, save_image, save_mask
from .scene import BinaryMask, Image, MaskSet, SceneError, normalize, validate_scene

SIZES = (32, 64, 128)
SKY_FRACTION = 0.3
MAX_PLACEMENT_ATTEMPTS = 1000
MANIFEST_VERSION = 1

THING_LABELS = {"A": "boxthing", "B": "blobthing"}

# base (hue, saturation, value) per domain and region
_PALETTES = {
    "A": {"sky": (0.60, 0.68, 0.92), "ground": (0.0, 0.03, 0.50), "thing": (0.0, 0.80, 0.78)},
    "B": {"sky": (0.085, 0.78, 0.95), "ground": (0.31, 0.60, 0.50), "thing": (0.0, 0.04, 0.94)},
}
# per-scene jitter: one hue shift and one brightness shift shared by all regions
_HUE_JITTER = {"A": 0.04, "B": 0.025}
_VALUE_JITTER = 0.08


@dataclass(frozen=True)
class ToySceneSpec:
    domain_id: str
    size: int
    n_instances: int
    seed: int

    def __post_init__(self):
        if self.domain_id not in THING_LABELS:
            raise SceneError(f"domain_id must be 'A' or 'B', got {self.domain_id!r}")
        if self.size not in SIZES:
            raise SceneError(f"size must be one of {SIZES}, got {self.size}")
        if not 1 <= self.n_instances <= 9:
            raise SceneError(f"n_instances must be in 1..9, got {self.n_instances}")
        if self.seed < 0:
            raise SceneError("seed must be non-negative")


@dataclass(frozen=True)
class Record:
    image: Image
    masks: MaskSet
    domain_id: str


def _jittered(base, dh, dv):
    h, s, v = base
    return (h + dh) % 1.0, s, v + dv


def _rgb(h, s, v):
    return np.array(colorsys.hsv_to_rgb(h, s, min(max(v, 0.0), 1.0))) * 255.0


def generate_scene(spec: ToySceneSpec) -> tuple[Image, MaskSet]:
    rng = np.random.default_rng(spec.seed)
    pal = _PALETTES[spec.domain_id]
    n = spec.size
    sky_rows = int(round(SKY_FRACTION * n))
    raw = np.zeros((n, n, 3), dtype=np.float64)

    dh = rng.uniform(-_HUE_JITTER[spec.domain_id], _HUE_JITTER[spec.domain_id])
    dv = rng.uniform(-_VALUE_JITTER, _VALUE_JITTER)
    fade = rng.uniform(0.15, 0.30)

    # sky: vertical brightness gradient, darker toward the horizon
    h, s, v = _jittered(pal["sky"], dh, dv)
    for row in range(sky_rows):
        raw[row, :] = _rgb(h, s, v - fade * row / max(sky_rows - 1, 1))
    raw[sky_rows:, :] = _rgb(*_jittered(pal["ground"], dh, dv))
    thing_rgb = _rgb(*_jittered(pal["thing"], dh, dv))

    side_lo, side_hi = max(4, n // 10), max(6, n // 6)
    boxes: list[tuple[int, int, int]] = []  # (top, left, side)
    attempts = 0
    while len(boxes) < spec.n_instances:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS:
            raise SceneError("placement failed")
        side = int(rng.integers(side_lo, side_hi + 1))
        top = int(rng.integers(sky_rows + 1, n - side))
        left = int(rng.integers(1, n - side))
        # one pixel of clearance keeps shapes visually separate
        if all(top + side < t - 1 or t + sd < top - 1 or left + side < l - 1 or l + sd < left - 1
               for t, l, sd in boxes):
            boxes.append((top, left, side))

    yy, xx = np.mgrid[0:n, 0:n]
    label = THING_LABELS[spec.domain_id]
    inst_masks = []
    for top, left, side in boxes:
        if spec.domain_id == "A":
            bits = (yy >= top) & (yy < top + side) & (xx >= left) & (xx < left + side)
        else:
            c = (side - 1) / 2.0
            r = side / 2.0
            bits = (yy - top - c) ** 2 + (xx - left - c) ** 2 <= r * r
        raw[bits] = thing_rgb
        inst_masks.append(BinaryMask(bits, label))

    things = np.zeros((n, n), dtype=bool)
    for m in inst_masks:
        things |= m.bits.astype(bool)
    band = yy < sky_rows
    stuff = {
        "sky": BinaryMask(band & ~things, "sky"),
        "ground": BinaryMask(~band & ~things, "ground"),
    }
    image = normalize(np.clip(np.floor(raw + 0.5), 0, 255).astype(np.uint8))
    return image, MaskSet(inst_masks, stuff)


def scene_instances(domain_id: str, seed: int, max_instances: int = 3) -> int:
    """Instance count used by generate_dataset for a given scene seed."""
    return int(np.random.default_rng([seed, 7919]).integers(1, max_instances + 1))


def generate_dataset(out_dir, domain_id: str, count: int, size: int, seed: int,
                     max_instances: int = 3) -> dict:
    if count < 1:
        raise SceneError("count must be >= 1")
    root = Path(out_dir)
    try:
        (root / "images").mkdir(parents=True, exist_ok=True)
        (root / "masks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create dataset directory {root}: {exc}") from exc

    records = []
    for index in range(count):
        scene_seed = seed + index
        spec = ToySceneSpec(domain_id, size, scene_instances(domain_id, scene_seed, max_instances),
                            scene_seed)
        image, masks = generate_scene(spec)
        stem = f"{index:06d}"
        rec = {"image_path": f"images/{stem}.png", "instance_mask_paths": [],
               "stuff_mask_paths": {}, "domain_id": domain_id}
        try:
            save_image(image, root / rec["image_path"])
            for k, m in enumerate(masks.instance_masks):
                p = f"masks/{stem}_inst_{k}.png"
                save_mask(m, root / p)
                rec["instance_mask_paths"].append(p)
            for lab, m in masks.stuff_masks.items():
                p = f"masks/{stem}_stuff_{lab}.png"
                save_mask(m, root / p)
                rec["stuff_mask_paths"][lab] = p
        except OSError as exc:
            raise OSError(f"failed writing scene {stem} under {root}: {exc}") from exc
        records.append(rec)

    manifest = {"records": records, "version": MANIFEST_VERSION}
    path = root / "manifest.json"
    try:
        path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    load_manifest(path)
    return manifest


def load_manifest(path) -> list[Record]:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
        entries = manifest["records"]
        version = manifest["version"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SceneError(f"malformed manifest {path}: {exc!r}") from exc
    if version != MANIFEST_VERSION:
        raise SceneError(f"manifest {path}: unsupported version {version}")

    root = path.parent
    out: list[Record] = []
    size = None
    for i, rec in enumerate(entries):
        try:
            domain = rec["domain_id"]
            image = load_image(root / rec["image_path"])
            thing_label = THING_LABELS.get(domain, "thing")
            inst = [load_mask(root / p, thing_label) for p in rec["instance_mask_paths"]]
            stuff = {lab: load_mask(root / p, lab) for lab, p in rec["stuff_mask_paths"].items()}
        except (KeyError, TypeError) as exc:
            raise SceneError(f"malformed manifest {path}: record {i}: {exc!r}") from exc
        if size is None:
            size = image.shape
        elif image.shape != size:
            raise SceneError(f"mixed image sizes: record {i} is {image.shape}, expected {size}")
        masks = MaskSet(inst, stuff)
        problems = validate_scene(image, masks)
        if problems:
            raise SceneError(f"record {i} ({rec['image_path']}): " + "; ".join(problems))
        out.append(Record(image, masks, domain))
    return out
