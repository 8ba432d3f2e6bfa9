"""Mask-driven compositing of translated images, and the full plan pipeline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import encode_style, sample_style
from .imageio import load_image
from .scene import BinaryMask, Image, MaskSet, SceneError, TranslationPlan
from .sra import style_encoder_for, translate_style
from .tra import apply_tra_chain


@dataclass(frozen=True)
class StuffTranslation:
    translated: Image
    mask: BinaryMask
    order_index: int


def composite_single(x_i: Image, x_hat_r: Image, B_i: BinaryMask) -> Image:
    """Take ``x_hat_r`` where the mask is set and ``x_i`` elsewhere."""
    if x_i.pixels.shape != x_hat_r.pixels.shape or B_i.shape != x_i.shape:
        raise SceneError(f"shape mismatch: image {x_i.shape}, translated {x_hat_r.shape}, "
                         f"mask {B_i.shape}")
    return Image(np.where(B_i.bits[..., None].astype(bool), x_hat_r.pixels, x_i.pixels))


def composite_stuff(x_thing: Image, translations: Sequence[StuffTranslation]) -> Image:
    """Fold ``composite_single`` over translations in ascending ``order_index``.

    Where masks overlap, the higher ``order_index`` wins.
    """
    for t in translations:
        if t.translated.pixels.shape != x_thing.pixels.shape or t.mask.shape != x_thing.shape:
            raise SceneError(f"stuff translation l={t.order_index}: shape mismatch with base "
                             f"image {x_thing.shape}")
    out = x_thing
    for t in sorted(translations, key=lambda t: t.order_index):
        out = composite_single(out, t.translated, t.mask)
    return out


def resolve_style(step, bundle, seed: int | None = None) -> np.ndarray:
    """Style code for one stuff step: a prior draw, or the target-domain style
    encoding of a reference image. ``seed`` overrides a random source's seed."""
    src = step.style_source
    if src.kind == "random":
        return sample_style(src.seed if seed is None else seed)
    ref = load_image(src.image_path)
    return encode_style(ref, style_encoder_for(bundle, step.target_domain_id))


def plan_compose(x: Image, masks: MaskSet, plan: TranslationPlan, registry,
                 seeds: Sequence[int] | None = None, return_stages: bool = False):
    """Run the thing chain, then translate and composite every stuff step.

    ``seeds`` overrides the random style seed of each stuff step (one per step).
    Stuff masks are always taken from the original ``masks``.
    """
    try:
        x_thing, thing_masks = apply_tra_chain(x, masks, plan.thing_steps, registry)
    except SceneError as exc:
        raise SceneError(f"TRA {exc}") from exc

    translations = []
    for l, step in enumerate(plan.stuff_steps, start=1):
        try:
            bundle = registry.sra(step.sra_bundle_id)
        except KeyError as exc:
            raise SceneError(f"SRA step {l}: unresolved bundle {step.sra_bundle_id!r}") from exc
        if step.source_label not in masks.stuff_masks:
            raise SceneError(f"SRA step {l}: no stuff mask labeled {step.source_label}")
        try:
            style = resolve_style(step, bundle, None if seeds is None else seeds[l - 1])
            x_hat = translate_style(x_thing, style, bundle, step.target_domain_id)
        except (SceneError, OSError) as exc:
            raise SceneError(f"SRA step {l}: {exc}") from exc
        translations.append(StuffTranslation(x_hat, masks.stuff_masks[step.source_label], l))

    try:
        out = composite_stuff(x_thing, translations)
    except SceneError as exc:
        raise SceneError(f"composite: {exc}") from exc
    if return_stages:
        return out, x_thing, thing_masks, translations
    return out
