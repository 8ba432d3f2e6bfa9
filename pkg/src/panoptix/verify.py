"""Finite-difference verification of every training loss term on small inputs."""
from __future__ import annotations

import numpy as np
import torch

from .core import NetSize, coordinate_errors, init_weights
from .sra import SraNets, sra_discriminator_loss, sra_loss
from .tra import DEFAULT_SIZE, TraNets, tra_discriminator_loss, tra_loss

# modules whose parameters each loss term can reach
SRA_TERMS = {
    "gan_i": ("enc_c_r", "gen_i"),
    "gan_r": ("enc_c_i", "gen_r"),
    "recon_x_i": ("enc_c_i", "enc_s_i", "gen_i"),
    "recon_x_r": ("enc_c_r", "enc_s_r", "gen_r"),
    "recon_c_i": ("enc_c_i", "enc_c_r", "gen_r"),
    "recon_c_r": ("enc_c_r", "enc_c_i", "gen_i"),
    "recon_s_i": ("enc_c_r", "enc_s_i", "gen_i"),
    "recon_s_r": ("enc_c_i", "enc_s_r", "gen_r"),
    "total": ("enc_c_i", "enc_s_i", "enc_c_r", "enc_s_r", "gen_i", "gen_r"),
}
TRA_TERMS = ("gan", "cycle", "identity", "context", "total")
INIT_STD = 0.02


def _params(nets, modules):
    return {f"{m}.{n}": p for m in modules for n, p in getattr(nets, m).named_parameters()}


def random_scene_tensors(seed: int, size: int = 8, n_masks: int = 2, dtype=torch.float64):
    """Random image in [-1, 1] plus ``n_masks`` disjoint random instance masks."""
    rng = np.random.default_rng(seed)
    x = torch.tensor(rng.uniform(-1, 1, (1, 3, size, size)), dtype=dtype)
    owner = rng.integers(0, n_masks + 1, (size, size))
    masks = np.stack([(owner == k + 1) for k in range(n_masks)]).astype(np.float64)
    return x, torch.tensor(masks[None], dtype=dtype)


def sra_gradient_errors(seed: int = 0, size: int = 8, n_coords: int = 50, epsilon: float = 1e-3,
                        net_size: NetSize | None = None) -> dict[str, np.ndarray]:
    """Per-coordinate relative errors for every SRA loss term, in float64."""
    nets = init_weights(SraNets(net_size or NetSize()), seed, std=INIT_STD).double()
    x_i, _ = random_scene_tensors(seed + 1, size)
    x_r, _ = random_scene_tensors(seed + 2, size)
    errors = {}
    for term, modules in SRA_TERMS.items():
        errors[term] = coordinate_errors(
            lambda t=term: sra_loss(x_i, x_r, nets, seeds=(3, 4))[t],
            _params(nets, modules), epsilon, n_coords, seed)
    errors["discriminator"] = coordinate_errors(
        lambda: sra_discriminator_loss(x_i, x_r, nets, seeds=(3, 4)),
        _params(nets, ("dis_i", "dis_r")), epsilon, n_coords, seed)
    return errors


def tra_gradient_errors(seed: int = 0, size: int = 8, n_coords: int = 50, epsilon: float = 1e-3,
                        net_size: NetSize | None = None) -> dict[str, np.ndarray]:
    """Per-coordinate relative errors for every TRA loss term, in float64."""
    nets = init_weights(TraNets(net_size or DEFAULT_SIZE), seed, std=INIT_STD).double()
    x_i, p_i = random_scene_tensors(seed + 1, size)
    x_r, p_r = random_scene_tensors(seed + 2, size)
    batch = (x_i, p_i, x_r, p_r)
    gen = _params(nets, ("gen_ir", "gen_ri"))
    errors = {t: coordinate_errors(lambda t=t: tra_loss(batch, nets)[t], gen, epsilon, n_coords,
                                   seed)
              for t in TRA_TERMS}
    errors["discriminator"] = coordinate_errors(
        lambda: tra_discriminator_loss(batch, nets), _params(nets, ("dis_r", "dis_i")),
        epsilon, n_coords, seed)
    return errors
