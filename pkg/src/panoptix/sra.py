"""Stuff-related augmentation: multimodal style translation between two domains.

Each domain d has a content encoder, a style encoder, a decoder G_d and a
discriminator D_d. Content codes live in a space shared by both domains;
style codes follow a standard normal prior.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from .core import (
    AdamState,
    ContentEncoder,
    Decoder,
    NetSize,
    PatchDiscriminator,
    StyleEncoder,
    TrainConfig,
    init_weights,
    load_into,
    sample_style,
    save_params,
    step_module,
    style_seed,
    to_image,
    to_tensor,
)
from .core.optim import GradientBlowUp
from .scene import Image, SceneError


META_FILE = "sra_meta.json"
COMPONENTS = ("gan_i", "gan_r", "recon_x_i", "recon_x_r", "recon_c_i", "recon_c_r",
              "recon_s_i", "recon_s_r", "total")


@dataclass(frozen=True)
class Lambdas:
    x: float = 10.0
    c: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if min(self.x, self.c, self.s) < 0:
            raise ValueError("loss weights must be non-negative")


class SraNets(nn.Module):
    def __init__(self, size: NetSize = NetSize()):
        super().__init__()
        self.size = size
        w = size.widths

        def content():
            return ContentEncoder(out_dim=size.content_dim, widths=w[:2], n_res=size.n_res)

        def decoder():
            return Decoder(size.content_dim, width=w[0], n_res=size.n_res, mlp_dim=size.mlp_dim)

        self.enc_c_i, self.enc_c_r = content(), content()
        self.enc_s_i, self.enc_s_r = StyleEncoder(widths=w), StyleEncoder(widths=w)
        self.gen_i, self.gen_r = decoder(), decoder()
        self.dis_i, self.dis_r = PatchDiscriminator(widths=w), PatchDiscriminator(widths=w)

    def generator_modules(self) -> nn.ModuleDict:
        return nn.ModuleDict({k: getattr(self, k) for k in
                              ("enc_c_i", "enc_s_i", "enc_c_r", "enc_s_r", "gen_i", "gen_r")})

    def discriminator_modules(self) -> nn.ModuleDict:
        return nn.ModuleDict({"dis_i": self.dis_i, "dis_r": self.dis_r})


@dataclass
class SraBundle:
    nets: SraNets
    domain_i: str
    domain_r: str
    lambdas: Lambdas = field(default_factory=Lambdas)
    config: TrainConfig = field(default_factory=TrainConfig)
    train_log: list = field(default_factory=list)
    first_losses: dict = field(default_factory=dict)

    def save(self, directory) -> None:
        directory = Path(directory)
        save_params(dict(self.nets.named_parameters()), directory)
        meta = {
            "domain_i": self.domain_i, "domain_r": self.domain_r,
            "size": self.nets.size.to_dict(),
            "lambdas": {"x": self.lambdas.x, "c": self.lambdas.c, "s": self.lambdas.s},
            "config": self.config.to_dict(),
            "train_log": self.train_log, "first_losses": self.first_losses,
        }
        (directory / META_FILE).write_text(json.dumps(meta, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "SraBundle":
        directory = Path(directory)
        meta = json.loads((directory / META_FILE).read_text(encoding="utf-8"))
        nets = load_into(SraNets(NetSize.from_dict(meta.get("size"))), directory)
        return cls(nets, meta["domain_i"], meta["domain_r"], Lambdas(**meta["lambdas"]),
                   TrainConfig.from_dict(meta["config"]), meta.get("train_log", []),
                   meta.get("first_losses", {}))


def l1(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return (a - b).abs().mean()


def _style_tensor(seed: int, like: torch.Tensor) -> torch.Tensor:
    return torch.from_numpy(sample_style(seed)).to(like.dtype).unsqueeze(0)


def sra_loss(x_i: torch.Tensor, x_r: torch.Tensor, nets, lambdas: Lambdas = Lambdas(),
             seeds: tuple[int, int] = (0, 1)) -> dict[str, torch.Tensor]:
    """Encoder/generator objective for one sample per domain.

    ``seeds`` = (seed of the prior style for domain r, seed for domain i).
    """
    s_r = _style_tensor(seeds[0], x_i)
    s_i = _style_tensor(seeds[1], x_i)

    c_i, s_i_enc = nets.enc_c_i(x_i), nets.enc_s_i(x_i)
    c_r, s_r_enc = nets.enc_c_r(x_r), nets.enc_s_r(x_r)

    # within-domain image reconstruction
    x_i_rec = nets.gen_i(c_i, s_i_enc)
    x_r_rec = nets.gen_r(c_r, s_r_enc)

    # cross-domain translation with prior styles
    x_ir = nets.gen_r(c_i, s_r)
    x_ri = nets.gen_i(c_r, s_i)

    out = {
        "gan_i": ((nets.dis_i(x_ri) - 1) ** 2).mean(),
        "gan_r": ((nets.dis_r(x_ir) - 1) ** 2).mean(),
        "recon_x_i": l1(x_i_rec, x_i),
        "recon_x_r": l1(x_r_rec, x_r),
        "recon_c_i": l1(nets.enc_c_r(x_ir), c_i),
        "recon_c_r": l1(nets.enc_c_i(x_ri), c_r),
        "recon_s_i": l1(nets.enc_s_i(x_ri), s_i),
        "recon_s_r": l1(nets.enc_s_r(x_ir), s_r),
    }
    out["total"] = (out["gan_i"] + out["gan_r"]
                    + lambdas.x * (out["recon_x_i"] + out["recon_x_r"])
                    + lambdas.c * (out["recon_c_i"] + out["recon_c_r"])
                    + lambdas.s * (out["recon_s_i"] + out["recon_s_r"]))
    if not torch.isfinite(out["total"]):
        raise GradientBlowUp("non-finite SRA loss")
    return out


def sra_discriminator_loss(x_i: torch.Tensor, x_r: torch.Tensor, nets,
                           seeds: tuple[int, int] = (0, 1)) -> torch.Tensor:
    """Least-squares discriminator objective: real -> 1, translated -> 0."""
    with torch.no_grad():
        x_ir = nets.gen_r(nets.enc_c_i(x_i), _style_tensor(seeds[0], x_i))
        x_ri = nets.gen_i(nets.enc_c_r(x_r), _style_tensor(seeds[1], x_i))
    return (((nets.dis_r(x_r) - 1) ** 2).mean() + (nets.dis_r(x_ir) ** 2).mean()
            + ((nets.dis_i(x_i) - 1) ** 2).mean() + (nets.dis_i(x_ri) ** 2).mean())


def _images(dataset) -> list[Image]:
    return [getattr(d, "image", d) for d in dataset]


class _Shuffler:
    """Endless seeded reshuffling over range(n)."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n, self.rng = n, rng
        self.order, self.pos = rng.permutation(n), 0

    def next(self) -> int:
        if self.pos == self.n:
            self.order, self.pos = self.rng.permutation(self.n), 0
        self.pos += 1
        return int(self.order[self.pos - 1])


class LossWindow:
    """Accumulates per-step losses into fixed-size window means."""

    def __init__(self, every: int):
        self.every = max(1, every)
        self.acc: dict[str, float] = {}
        self.count = 0
        self.entries: list[dict] = []

    def add(self, step: int, losses: dict[str, float]):
        for k, v in losses.items():
            self.acc[k] = self.acc.get(k, 0.0) + v
        self.count += 1
        if self.count == self.every:
            self.flush(step)

    def flush(self, step: int):
        if self.count:
            self.entries.append({"step": step,
                                 "losses": {k: v / self.count for k, v in self.acc.items()}})
        self.acc, self.count = {}, 0


def train_sra(dataset_i: Sequence, dataset_r: Sequence, config: TrainConfig,
              lambdas: Lambdas = Lambdas(), domain_i: str = "A", domain_r: str = "B",
              progress=None, size: NetSize = NetSize()) -> SraBundle:
    """Alternate one discriminator and one encoder/generator Adam step per iteration."""
    imgs_i, imgs_r = _images(dataset_i), _images(dataset_r)
    if not imgs_i or not imgs_r:
        raise SceneError("empty dataset")
    if config.iterations < 1:
        raise ValueError("iterations must be >= 1")

    nets = init_weights(SraNets(size), config.seed)
    gen, dis = nets.generator_modules(), nets.discriminator_modules()
    gen_state, dis_state = AdamState(), AdamState()
    ti = [to_tensor(x) for x in imgs_i]
    tr = [to_tensor(x) for x in imgs_r]
    rng = np.random.default_rng(config.seed)
    pick_i, pick_r = _Shuffler(len(ti), rng), _Shuffler(len(tr), rng)
    window = LossWindow(config.log_every)
    first: dict = {}

    for it in range(1, config.iterations + 1):
        x_i, x_r = ti[pick_i.next()], tr[pick_r.next()]
        seeds = (style_seed(config.seed, it, 0), style_seed(config.seed, it, 1))

        d_loss = sra_discriminator_loss(x_i, x_r, nets, seeds)
        d_loss.backward()
        step_module(dis, dis_state, config)

        losses = sra_loss(x_i, x_r, nets, lambdas, seeds)
        losses["total"].backward()
        step_module(gen, gen_state, config)
        nets.zero_grad(set_to_none=True)

        scalars = {k: v.item() for k, v in losses.items()}
        scalars["dis"] = d_loss.item()
        if it == 1:
            first = scalars
        window.add(it, scalars)
        if progress is not None and it % config.log_every == 0:
            progress(it, window.entries[-1]["losses"])
    window.flush(config.iterations)
    return SraBundle(nets, domain_i, domain_r, lambdas, config, window.entries, first)


def _direction(bundle: SraBundle, direction: str):
    n = bundle.nets
    if direction in ("i->r", bundle.domain_r):
        return n.enc_c_i, n.gen_r
    if direction in ("r->i", bundle.domain_i):
        return n.enc_c_r, n.gen_i
    raise SceneError(f"bundle {bundle.domain_i}<->{bundle.domain_r} cannot translate "
                     f"toward {direction!r}")


def translate_style(x: Image, s: np.ndarray, bundle: SraBundle, direction: str = "i->r") -> Image:
    """Decode the content of ``x`` with style ``s`` in the target domain.

    ``direction`` is "i->r", "r->i", or a target domain id.
    """
    enc_c, gen = _direction(bundle, direction)
    with torch.no_grad():
        t = to_tensor(x)
        style = torch.as_tensor(np.asarray(s, dtype=np.float32)).unsqueeze(0)
        return to_image(gen(enc_c(t), style))


def style_encoder_for(bundle: SraBundle, domain: str):
    n = bundle.nets
    if domain == bundle.domain_r:
        return n.enc_s_r
    if domain == bundle.domain_i:
        return n.enc_s_i
    raise SceneError(f"domain {domain!r} not part of bundle {bundle.domain_i}<->{bundle.domain_r}")


def reconstruct(x: Image, bundle: SraBundle, domain: str) -> Image:
    n = bundle.nets
    if domain == bundle.domain_i:
        enc_c, enc_s, gen = n.enc_c_i, n.enc_s_i, n.gen_i
    elif domain == bundle.domain_r:
        enc_c, enc_s, gen = n.enc_c_r, n.enc_s_r, n.gen_r
    else:
        raise SceneError(f"domain {domain!r} not part of bundle")
    with torch.no_grad():
        t = to_tensor(x)
        return to_image(gen(enc_c(t), enc_s(t)))
