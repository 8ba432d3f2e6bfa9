"""Small encoders, decoders and patch discriminators shared by both translators."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..scene import BinaryMask, Image, SceneError

CONTENT_DIM = 32
STYLE_DIM = 8
WIDTHS = (16, 32, 64)


@dataclass(frozen=True)
class NetSize:
    """Channel plan shared by every network of a translator."""

    widths: tuple[int, int, int] = WIDTHS
    content_dim: int = CONTENT_DIM
    n_res: int = 2
    mlp_dim: int = 32

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) != 3 or min(self.widths) < 1 or self.content_dim < 1:
            raise ValueError(f"invalid network size {self}")

    def to_dict(self) -> dict:
        return {**asdict(self), "widths": list(self.widths)}

    @classmethod
    def from_dict(cls, d: dict | None) -> "NetSize":
        return cls(**d) if d else cls()


def to_tensor(image: Image, dtype=torch.float32) -> torch.Tensor:
    """(H, W, 3) image -> (1, 3, H, W) tensor."""
    return torch.from_numpy(np.array(image.pixels)).permute(2, 0, 1).unsqueeze(0).to(dtype)


def to_image(t: torch.Tensor) -> Image:
    return Image(t.detach().squeeze(0).permute(1, 2, 0).to(torch.float32).cpu().numpy())


def masks_to_tensor(masks: Sequence[BinaryMask], dtype=torch.float32) -> torch.Tensor:
    """List of masks -> (1, N, H, W) tensor."""
    arr = np.stack([m.bits for m in masks]).astype(np.float32)
    return torch.from_numpy(arr).unsqueeze(0).to(dtype)


def init_weights(module: nn.Module, seed: int, std: float = 0.02) -> nn.Module:
    """Normal(0, std) weights and zero biases, drawn deterministically from seed."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in module.named_parameters():
            if name.endswith("bias"):
                p.zero_()
            else:
                p.copy_(torch.randn(p.shape, generator=gen, dtype=torch.float64).to(p.dtype) * std)
    return module


def _check_divisible(h: int, w: int, k: int = 4):
    if h % k or w % k:
        raise SceneError(f"image size ({h},{w}) not divisible by {k}")


class ConvBlock(nn.Module):
    def __init__(self, cin, cout, kernel, stride=1, norm=True, act="relu", pad_mode="reflect"):
        super().__init__()
        self.pad = (kernel - stride + 1) // 2 if stride > 1 else kernel // 2
        self.pad_mode = pad_mode
        self.conv = nn.Conv2d(cin, cout, kernel, stride)
        self.norm = norm
        self.act = act

    def forward(self, x):
        if self.pad:
            x = F.pad(x, [self.pad] * 4, mode=self.pad_mode)
        x = self.conv(x)
        if self.norm:
            x = F.instance_norm(x, eps=1e-5)
        if self.act == "relu":
            x = F.relu(x)
        elif self.act == "lrelu":
            x = F.leaky_relu(x, 0.2)
        return x


class ResBlock(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.c1 = ConvBlock(dim, dim, 3)
        self.c2 = ConvBlock(dim, dim, 3, act=None)

    def forward(self, x):
        return x + self.c2(self.c1(x))


class ContentEncoder(nn.Module):
    """conv7 -> 2x strided conv4 -> residual blocks; output has 1/4 the spatial size."""

    def __init__(self, in_ch=3, out_dim=CONTENT_DIM, widths=WIDTHS[:2], n_res=2):
        super().__init__()
        w1, w2 = widths
        self.body = nn.Sequential(
            ConvBlock(in_ch, w1, 7),
            ConvBlock(w1, w2, 4, stride=2),
            ConvBlock(w2, out_dim, 4, stride=2),
            *[ResBlock(out_dim) for _ in range(n_res)],
        )

    def forward(self, x):
        _check_divisible(*x.shape[-2:])
        return self.body(x)


class StyleEncoder(nn.Module):
    def __init__(self, in_ch=3, style_dim=STYLE_DIM, widths=WIDTHS):
        super().__init__()
        w1, w2, w3 = widths
        self.body = nn.Sequential(
            ConvBlock(in_ch, w1, 7, norm=False),
            ConvBlock(w1, w2, 4, stride=2, norm=False),
            ConvBlock(w2, w3, 4, stride=2, norm=False),
        )
        self.fc = nn.Linear(w3, style_dim)

    def forward(self, x):
        _check_divisible(*x.shape[-2:])
        return self.fc(self.body(x).mean(dim=(2, 3)))


def adain(x, gamma, beta):
    return F.instance_norm(x, eps=1e-5) * (1 + gamma[:, :, None, None]) + beta[:, :, None, None]


class AdaResBlock(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.c1 = nn.Conv2d(dim, dim, 3)
        self.c2 = nn.Conv2d(dim, dim, 3)
        self.n_adain = 4 * dim

    def forward(self, x, ab):
        g1, b1, g2, b2 = ab.chunk(4, dim=1)
        y = F.relu(adain(self.c1(F.pad(x, [1] * 4, mode="reflect")), g1, b1))
        y = adain(self.c2(F.pad(y, [1] * 4, mode="reflect")), g2, b2)
        return x + y


class UpBlock(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, 3)
        self.n_adain = 2 * cout

    def forward(self, x, ab):
        g, b = ab.chunk(2, dim=1)
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        return F.relu(adain(self.conv(F.pad(x, [1] * 4, mode="reflect")), g, b))


class Decoder(nn.Module):
    """Style-modulated decoder: an MLP maps the style vector to per-channel
    scale/shift for every normalization layer."""

    def __init__(self, content_dim=CONTENT_DIM, style_dim=STYLE_DIM, width=WIDTHS[0],
                 n_res=2, mlp_dim=32, out_ch=3):
        super().__init__()
        self.res = nn.ModuleList(AdaResBlock(content_dim) for _ in range(n_res))
        self.up = nn.ModuleList([UpBlock(content_dim, width), UpBlock(width, width)])
        self.out = nn.Conv2d(width, out_ch, 7)
        blocks = list(self.res) + list(self.up)
        self.splits = [b.n_adain for b in blocks]
        self.mlp = nn.Sequential(
            nn.Linear(style_dim, mlp_dim), nn.ReLU(), nn.Linear(mlp_dim, sum(self.splits)),
        )

    def forward(self, content, style):
        if style.dim() == 1:
            style = style.unsqueeze(0)
        ab = self.mlp(style).split(self.splits, dim=1)
        x = content
        for blk, p in zip(list(self.res) + list(self.up), ab):
            x = blk(x, p)
        return torch.tanh(self.out(F.pad(x, [3] * 4, mode="reflect")))


class PatchDiscriminator(nn.Module):
    """Three strided conv4 layers and a 1x1 score head; output is (H/8, W/8)."""

    def __init__(self, in_ch=3, widths=WIDTHS):
        super().__init__()
        w1, w2, w3 = widths
        self.body = nn.Sequential(
            ConvBlock(in_ch, w1, 4, stride=2, norm=False, act="lrelu", pad_mode="constant"),
            ConvBlock(w1, w2, 4, stride=2, norm=False, act="lrelu", pad_mode="constant"),
            ConvBlock(w2, w3, 4, stride=2, norm=False, act="lrelu", pad_mode="constant"),
        )
        self.head = nn.Conv2d(w3, 1, 1)

    def forward(self, x):
        return self.head(self.body(x))


# --- image-level operations ------------------------------------------------

def _param_dtype(module: nn.Module):
    return next(module.parameters()).dtype


def encode_content(image: Image, encoder: ContentEncoder) -> np.ndarray:
    """Content code as an (H/4, W/4, C) array."""
    _check_divisible(*image.shape)
    with torch.no_grad():
        c = encoder(to_tensor(image, _param_dtype(encoder)))
    return c.squeeze(0).permute(1, 2, 0).numpy()


def encode_style(image: Image, encoder: StyleEncoder) -> np.ndarray:
    _check_divisible(*image.shape)
    with torch.no_grad():
        return encoder(to_tensor(image, _param_dtype(encoder))).squeeze(0).numpy()


def decode(content: np.ndarray, style: np.ndarray, decoder: Decoder) -> Image:
    content = np.asarray(content)
    style = np.asarray(style)
    if content.ndim != 3 or content.shape[2] != decoder.res[0].c1.in_channels:
        raise SceneError(f"content code shape {content.shape} incompatible with decoder")
    if style.shape != (decoder.mlp[0].in_features,):
        raise SceneError(f"style code shape {style.shape} incompatible with decoder")
    dt = _param_dtype(decoder)
    with torch.no_grad():
        c = torch.from_numpy(np.array(content)).permute(2, 0, 1).unsqueeze(0).to(dt)
        s = torch.from_numpy(np.array(style)).to(dt)
        return to_image(decoder(c, s))


def discriminate(image: Image, condition_masks: Sequence[BinaryMask] | None,
                 discriminator: PatchDiscriminator) -> np.ndarray:
    dt = _param_dtype(discriminator)
    x = to_tensor(image, dt)
    if condition_masks:
        for m in condition_masks:
            if m.shape != image.shape:
                raise SceneError(f"mask '{m.label}': shape {m.shape} ≠ {image.shape}")
        x = torch.cat([x, masks_to_tensor(condition_masks, dt)], dim=1)
    if x.shape[1] != discriminator.body[0].conv.in_channels:
        raise SceneError(f"discriminator expects {discriminator.body[0].conv.in_channels} "
                         f"input channels, got {x.shape[1]}")
    with torch.no_grad():
        return discriminator(x)[0, 0].numpy()


def sample_style(seed: int, dim: int = STYLE_DIM) -> np.ndarray:
    """Draw a style code from the standard normal prior."""
    return np.random.default_rng(seed).standard_normal(dim).astype(np.float32)


def style_seed(base: int, *path: int) -> int:
    """Derive an independent style seed from a base seed and an index path."""
    return int(np.random.SeedSequence([base, *path]).generate_state(1)[0])
