"""Thing-related augmentation: instance transfiguration between two labeled domains.

A generator for one direction encodes the image once and every instance mask
separately. The image decoder sees the image features plus the sum of mask
features; the mask decoder additionally sees each instance's own features and
emits one soft mask per instance. Masks are processed in chunks: each chunk is
translated on top of the image produced by the previous chunk.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .core import AdamState, ContentEncoder, NetSize, PatchDiscriminator, TrainConfig, init_weights
from .core import load_into, save_params, step_module, to_image, to_tensor
from .core.nets import ConvBlock, ResBlock, masks_to_tensor
from .core.optim import GradientBlowUp
from .scene import BinaryMask, Image, MaskSet, SceneError, ThingStep, validate_scene
from .sra import LossWindow, _Shuffler, l1

META_FILE = "tra_meta.json"
DEFAULT_SIZE = NetSize(n_res=1)
COMPONENTS = ("gan", "cycle", "identity", "context", "total")


@dataclass(frozen=True)
class TraWeights:
    cycle: float = 10.0
    identity: float = 10.0
    context: float = 10.0


class _UpDecoder(nn.Module):
    def __init__(self, cin, cout, feat, width, n_res=1):
        super().__init__()
        self.body = nn.Sequential(
            ConvBlock(cin, feat, 3),
            *[ResBlock(feat) for _ in range(n_res)],
            nn.Upsample(scale_factor=2, mode="nearest"),
            ConvBlock(feat, width, 3),
            nn.Upsample(scale_factor=2, mode="nearest"),
            ConvBlock(width, width, 3),
        )
        self.out = nn.Conv2d(width, cout, 7)

    def forward(self, x):
        return self.out(F.pad(self.body(x), [3] * 4, mode="reflect"))


class TraGenerator(nn.Module):
    """One translation direction: (image, N masks) -> (image, N soft masks)."""

    def __init__(self, size: NetSize = DEFAULT_SIZE):
        super().__init__()
        f, w = size.content_dim, size.widths
        self.img_enc = ContentEncoder(3, f, w[:2], n_res=size.n_res)
        self.mask_enc = ContentEncoder(1, f, w[:2], n_res=size.n_res)
        self.img_dec = _UpDecoder(2 * f, 3, f, w[0], size.n_res)
        self.mask_dec = _UpDecoder(3 * f, 1, f, w[0], size.n_res)

    def forward(self, x: torch.Tensor, masks: torch.Tensor):
        n = masks.shape[1]
        if n == 0:
            raise SceneError("empty mask list")
        fx = self.img_enc(x)                                  # (1, F, h, w)
        fp = self.mask_enc(masks.transpose(0, 1))             # (N, F, h, w)
        fsum = fp.sum(dim=0, keepdim=True)
        img = torch.tanh(self.img_dec(torch.cat([fx, fsum], dim=1)))
        per = torch.cat([fx.expand(n, -1, -1, -1), fsum.expand(n, -1, -1, -1), fp], dim=1)
        soft = torch.sigmoid(self.mask_dec(per)).transpose(0, 1)  # (1, N, H, W)
        return img, soft


class TraNets(nn.Module):
    def __init__(self, size: NetSize = DEFAULT_SIZE):
        super().__init__()
        self.size = size
        self.gen_ir = TraGenerator(size)
        self.gen_ri = TraGenerator(size)
        self.dis_r = PatchDiscriminator(in_ch=4, widths=size.widths)
        self.dis_i = PatchDiscriminator(in_ch=4, widths=size.widths)

    def generator_modules(self) -> nn.ModuleDict:
        return nn.ModuleDict({"gen_ir": self.gen_ir, "gen_ri": self.gen_ri})

    def discriminator_modules(self) -> nn.ModuleDict:
        return nn.ModuleDict({"dis_r": self.dis_r, "dis_i": self.dis_i})


@dataclass
class TraBundle:
    nets: TraNets
    source_label: str
    target_label: str
    config: TrainConfig = field(default_factory=TrainConfig)
    chunk_size: int = 2
    weights: TraWeights = field(default_factory=TraWeights)
    train_log: list = field(default_factory=list)
    first_losses: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.source_label or not self.target_label:
            raise SceneError("TRA labels must be non-empty")
        if self.source_label == self.target_label:
            raise SceneError("TRA source and target labels must differ")

    def save(self, directory) -> None:
        directory = Path(directory)
        save_params(dict(self.nets.named_parameters()), directory)
        meta = {
            "source_label": self.source_label, "target_label": self.target_label,
            "size": self.nets.size.to_dict(),
            "config": self.config.to_dict(), "chunk_size": self.chunk_size,
            "weights": vars(self.weights).copy(),
            "train_log": self.train_log, "first_losses": self.first_losses,
        }
        (directory / META_FILE).write_text(json.dumps(meta, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "TraBundle":
        directory = Path(directory)
        meta = json.loads((directory / META_FILE).read_text(encoding="utf-8"))
        nets = load_into(TraNets(NetSize.from_dict(meta.get("size"))), directory)
        return cls(nets, meta["source_label"], meta["target_label"],
                   TrainConfig.from_dict(meta["config"]), meta.get("chunk_size", 2),
                   TraWeights(**meta.get("weights", {})), meta.get("train_log", []),
                   meta.get("first_losses", {}))


def soft_union(masks: torch.Tensor) -> torch.Tensor:
    """Probabilistic OR over the mask axis: (1, N, H, W) -> (1, 1, H, W)."""
    return 1 - torch.prod(1 - masks, dim=1, keepdim=True)


def _direction_loss(x, p, fwd: TraGenerator, back: TraGenerator, dis: PatchDiscriminator):
    fake, fake_p = fwd(x, p)
    gan = ((dis(torch.cat([fake, soft_union(fake_p)], dim=1)) - 1) ** 2).mean()
    rec, rec_p = back(fake, fake_p)
    cycle = l1(rec, x) + l1(rec_p, p)
    idt, idt_p = back(x, p)
    identity = l1(idt, x) + l1(idt_p, p)
    keep = (1 - soft_union(p)) * (1 - soft_union(fake_p))
    context = (keep * (fake - x).abs()).mean()
    return {"gan": gan, "cycle": cycle, "identity": identity, "context": context}, fake, fake_p


def _objective(batch, nets, weights: TraWeights):
    x_i, p_i, x_r, p_r = batch
    a, fake_r, _ = _direction_loss(x_i, p_i, nets.gen_ir, nets.gen_ri, nets.dis_r)
    b, fake_i, _ = _direction_loss(x_r, p_r, nets.gen_ri, nets.gen_ir, nets.dis_i)
    out = {k: a[k] + b[k] for k in a}
    out["total"] = (out["gan"] + weights.cycle * out["cycle"]
                    + weights.identity * out["identity"] + weights.context * out["context"])
    if not torch.isfinite(out["total"]):
        raise GradientBlowUp("non-finite TRA loss")
    return out, fake_r, fake_i


def tra_loss(batch, nets, weights: TraWeights = TraWeights()) -> dict[str, torch.Tensor]:
    """Generator objective for ``batch`` = (x_i, p_i, x_r, p_r) with masks as (1, N, H, W).

    Each component sums the i->r and r->i directions.
    """
    return _objective(batch, nets, weights)[0]


def tra_discriminator_loss(batch, nets) -> torch.Tensor:
    x_i, p_i, x_r, p_r = batch
    with torch.no_grad():
        fake_r, fake_pr = nets.gen_ir(x_i, p_i)
        fake_i, fake_pi = nets.gen_ri(x_r, p_r)
    loss = 0
    for dis, real, real_p, fake, fake_p in ((nets.dis_r, x_r, p_r, fake_r, fake_pr),
                                           (nets.dis_i, x_i, p_i, fake_i, fake_pi)):
        loss = loss + ((dis(torch.cat([real, soft_union(real_p)], 1)) - 1) ** 2).mean()
        loss = loss + (dis(torch.cat([fake, soft_union(fake_p)], 1)) ** 2).mean()
    return loss


def _chunks(n: int, size: int) -> list[slice]:
    if not size or size >= n:
        return [slice(0, n)]
    return [slice(k, min(k + size, n)) for k in range(0, n, size)]


def _prepare(dataset, label: str, side: str):
    out = []
    for idx, rec in enumerate(dataset):
        sel = [m for m in rec.masks.instance_masks if m.label == label]
        if not sel:
            raise SceneError(f"{side} record {idx}: no instance masks labeled {label}")
        out.append((to_tensor(rec.image), masks_to_tensor(sel)))
    return out


class _ChunkCursor:
    """Walks one sample's mask chunks, feeding each chunk the image left by the previous one."""

    def __init__(self, sample, chunk_size):
        self.x0, self.masks = sample
        self.slices = _chunks(self.masks.shape[1], chunk_size)
        self.pos = 0
        self.x = self.x0

    def next(self):
        if self.pos == len(self.slices):
            self.pos, self.x = 0, self.x0
        sl = self.slices[self.pos]
        self.pos += 1
        return self.x, self.masks[:, sl]

    def advance(self, translated: torch.Tensor):
        self.x = translated.detach()


def train_tra(dataset_i: Sequence, dataset_r: Sequence, config: TrainConfig,
              source_label: str, target_label: str, chunk_size: int = 2,
              weights: TraWeights = TraWeights(), progress=None,
              size: NetSize = DEFAULT_SIZE) -> TraBundle:
    """Train both translation directions with alternating D/G Adam steps.

    One step per mask chunk; a sample with more chunks on one side than the
    other restarts the shorter side from its original image.
    """
    data_i = _prepare(dataset_i, source_label, "source")
    data_r = _prepare(dataset_r, target_label, "target")
    if not data_i or not data_r:
        raise SceneError("empty dataset")
    if config.epochs < 1:
        raise ValueError("epochs must be >= 1")

    nets = init_weights(TraNets(size), config.seed)
    gen, dis = nets.generator_modules(), nets.discriminator_modules()
    gen_state, dis_state = AdamState(), AdamState()
    rng = np.random.default_rng(config.seed)
    pick_r = _Shuffler(len(data_r), rng)
    window = LossWindow(config.log_every)
    first: dict = {}
    step = 0

    for _epoch in range(config.epochs):
        for i in rng.permutation(len(data_i)):
            cur_i = _ChunkCursor(data_i[int(i)], chunk_size)
            cur_r = _ChunkCursor(data_r[pick_r.next()], chunk_size)
            for _ in range(max(len(cur_i.slices), len(cur_r.slices))):
                step += 1
                x_i, p_i = cur_i.next()
                x_r, p_r = cur_r.next()
                batch = (x_i, p_i, x_r, p_r)

                d_loss = tra_discriminator_loss(batch, nets)
                d_loss.backward()
                step_module(dis, dis_state, config)

                losses, fake_r, fake_i = _objective(batch, nets, weights)
                losses["total"].backward()
                step_module(gen, gen_state, config)
                nets.zero_grad(set_to_none=True)
                cur_i.advance(fake_r)
                cur_r.advance(fake_i)

                scalars = {k: v.item() for k, v in losses.items()}
                scalars["dis"] = d_loss.item()
                if step == 1:
                    first = scalars
                window.add(step, scalars)
                if progress is not None and step % config.log_every == 0:
                    progress(step, window.entries[-1]["losses"])
    window.flush(step)
    return TraBundle(nets, source_label, target_label, config, chunk_size, weights,
                     window.entries, first)


def _generator(bundle: TraBundle, direction: str) -> TraGenerator:
    if direction in ("i->r", bundle.target_label):
        return bundle.nets.gen_ir
    if direction in ("r->i", bundle.source_label):
        return bundle.nets.gen_ri
    raise SceneError(f"unknown TRA direction {direction!r}")


def tra_forward(x: Image, masks: Sequence[BinaryMask], bundle: TraBundle,
                direction: str = "i->r", chunk_size: int | None = None):
    """Translate ``x`` and its instance ``masks``; returns (image, binary masks).

    Masks are processed in chunks of ``chunk_size`` (default: the bundle's
    training chunk size; 0 means all at once). Generated masks are binarized at
    0.5 and pixels claimed by several instances go to the highest soft value.
    """
    masks = list(masks)
    if not masks:
        raise SceneError("empty mask list")
    probs = validate_scene(x, MaskSet(masks))
    if probs:
        raise SceneError("; ".join(probs))
    gen = _generator(bundle, direction)
    size = bundle.chunk_size if chunk_size is None else chunk_size
    cur = to_tensor(x)
    p = masks_to_tensor(masks)
    softs = []
    with torch.no_grad():
        for sl in _chunks(len(masks), size):
            cur, soft = gen(cur, p[:, sl])
            softs.append(soft)
    soft = torch.cat(softs, dim=1)[0].numpy()
    win = soft.argmax(axis=0)
    bits = [(soft[n] >= 0.5) & (win == n) for n in range(len(masks))]
    return to_image(cur), [BinaryMask(b.astype(np.uint8), m.label) for b, m in zip(bits, masks)]


def apply_tra_chain(x: Image, masks: MaskSet, thing_steps: Sequence[ThingStep], registry):
    """Fold the thing steps over (image, masks), returning (x_thing, updated MaskSet)."""
    for k, step in enumerate(thing_steps, start=1):
        try:
            bundle = registry.tra(step.tra_bundle_id)
        except KeyError as exc:
            raise SceneError(f"step {k}: unresolved TRA bundle {step.tra_bundle_id!r}") from exc
        if (bundle.source_label, bundle.target_label) == (step.source_label, step.target_label):
            direction = "i->r"
        elif (bundle.target_label, bundle.source_label) == (step.source_label, step.target_label):
            direction = "r->i"
        else:
            raise SceneError(f"step {k}: bundle {step.tra_bundle_id!r} maps "
                             f"{bundle.source_label}<->{bundle.target_label}, not "
                             f"{step.source_label}->{step.target_label}")
        idx = masks.instances_labeled(step.source_label)
        if not idx:
            raise SceneError(f"step {k}: no masks labeled {step.source_label}")
        x, generated = tra_forward(x, [masks.instance_masks[i] for i in idx], bundle, direction)
        others = [m for i, m in enumerate(masks.instance_masks) if i not in set(idx)]
        taken = np.zeros(x.shape, dtype=np.uint8)
        for m in others:
            taken |= m.bits
        new = list(masks.instance_masks)
        for i, g in zip(idx, generated):
            new[i] = BinaryMask(g.bits & (1 - taken), step.target_label)
        masks = MaskSet(new, masks.stuff_masks)
    return x, masks
