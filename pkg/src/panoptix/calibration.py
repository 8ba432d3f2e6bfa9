"""Toy-scale training runs and the summary numbers the acceptance checks read."""
from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import sample_style, style_seed
from .metrics import context_preservation, diversity_score, hue_progress, mean_hue
from .scene import BinaryMask
from .sra import SraBundle, reconstruct, translate_style
from .toyset import generate_dataset, load_manifest
from .tra import TraBundle, tra_forward

# dataset seeds: disjoint ranges so train and held-out scenes never coincide
TRAIN_SEEDS = {"A": 0, "B": 100_000}
HELDOUT_SEEDS = {"A": 500_000, "B": 600_000}


@dataclass
class ToySplits:
    train_a: list
    train_b: list
    test_a: list
    test_b: list


def toy_splits(size: int, count: int = 200, held_out: int = 20) -> ToySplits:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        out = []
        for dom, seeds, n in [("A", TRAIN_SEEDS, count), ("B", TRAIN_SEEDS, count),
                              ("A", HELDOUT_SEEDS, held_out), ("B", HELDOUT_SEEDS, held_out)]:
            d = tmp / f"{dom}{seeds[dom]}"
            generate_dataset(d, dom, n, size, seeds[dom])
            out.append(load_manifest(d))
    return ToySplits(*out)


def loss_fall(train_log: list, *keys: str) -> tuple[float, float, float]:
    """(first-window value, last-window value, ratio) of the summed ``keys``."""
    first = sum(train_log[0]["losses"][k] for k in keys)
    last = sum(train_log[-1]["losses"][k] for k in keys)
    return first, last, first / last


def sra_summary(bundle: SraBundle, test_a: list, test_b: list, n_styles: int = 10,
                seed: int = 0) -> dict:
    first, last, fall = loss_fall(bundle.train_log, "recon_x_i", "recon_x_r")
    skies_a = [r.masks.stuff_masks["sky"] for r in test_a]
    hue_a = mean_hue([r.image for r in test_a], skies_a)
    hue_b = mean_hue([r.image for r in test_b], [r.masks.stuff_masks["sky"] for r in test_b])
    styled_all, divs = [], []
    for k, r in enumerate(test_a):
        styled = [translate_style(r.image, sample_style(style_seed(seed, k, j)), bundle, "i->r")
                  for j in range(n_styles)]
        styled_all += styled
        divs.append(diversity_score(styled, r.masks.stuff_masks["sky"]))
    hue_t = mean_hue(styled_all, [m for m in skies_a for _ in range(n_styles)])
    recon = [float(np.abs(reconstruct(r.image, bundle, "A").pixels - r.image.pixels).mean())
             for r in test_a]
    return {
        "recon_x_first_window": first, "recon_x_last_window": last, "recon_x_fall": fall,
        "hue_A": hue_a, "hue_B": hue_b, "hue_translated": hue_t,
        "hue_progress": hue_progress(hue_a, hue_b, hue_t),
        "diversity_sky_per_scene": divs,
        "diversity_sky_mean": float(np.mean(divs)),
        "diversity_sky_min": float(np.min(divs)),
        "reconstruct_l1_heldout": float(np.mean(recon)),
    }


def tra_context(bundle: TraBundle, record) -> tuple[float, float]:
    """(outside, inside) mean change of one held-out scene translated i->r.

    The region is the union of the input masks and the generated masks.
    """
    masks = [m for m in record.masks.instance_masks if m.label == bundle.source_label]
    out, generated = tra_forward(record.image, masks, bundle, "i->r")
    region = np.zeros(record.image.shape, dtype=np.uint8)
    for m in masks + generated:
        region |= m.bits
    cp = context_preservation(record.image, out, BinaryMask(region))
    return cp.outside, cp.inside


def tra_summary(bundle: TraBundle, test_a: list) -> dict:
    first, last, fall = loss_fall(bundle.train_log, "cycle")
    ctx = [tra_context(bundle, r) for r in test_a]
    ok = [o < i for o, i in ctx]
    return {
        "cycle_first_window": first, "cycle_last_window": last, "cycle_fall": fall,
        "context_outside": [o for o, _ in ctx], "context_inside": [i for _, i in ctx],
        "context_pass_fraction": float(np.mean(ok)),
        "steps": bundle.train_log[-1]["step"],
    }
