"""Central finite-difference verification of autograd gradients."""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np
import torch


def grad_check(loss_fn: Callable[[], torch.Tensor], params: Mapping[str, torch.Tensor],
               epsilon: float = 1e-3, n_coords: int = 50, seed: int = 0) -> float:
    """Max relative error between analytic and numeric partial derivatives.

    ``loss_fn`` takes no arguments and reads ``params`` (leaf tensors with
    requires_grad) by closure. ``n_coords`` coordinates are sampled uniformly
    without replacement over all parameter entries (all of them if fewer).
    Run in float64 for meaningful results.
    """
    errs = coordinate_errors(loss_fn, params, epsilon, n_coords, seed)
    return float(errs.max()) if errs.size else 0.0


def coordinate_errors(loss_fn: Callable[[], torch.Tensor], params: Mapping[str, torch.Tensor],
                      epsilon: float = 1e-3, n_coords: int = 50, seed: int = 0) -> np.ndarray:
    """Per-coordinate relative errors for the same sample ``grad_check`` uses."""
    names = list(params)
    tensors = [params[n] for n in names]
    for t in tensors:
        if t.grad is not None:
            t.grad = None
    loss = loss_fn()
    analytic = torch.autograd.grad(loss, tensors, allow_unused=True)
    analytic = [torch.zeros_like(t) if g is None else g.detach() for t, g in zip(tensors, analytic)]

    sizes = np.array([t.numel() for t in tensors])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=min(n_coords, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    errs = []
    with torch.no_grad():
        for flat in picks:
            k = int(np.searchsorted(offsets, flat, side="right") - 1)
            idx = int(flat - offsets[k])
            view = tensors[k].view(-1)
            orig = view[idx].item()
            view[idx] = orig + epsilon
            up = loss_fn().item()
            view[idx] = orig - epsilon
            down = loss_fn().item()
            view[idx] = orig
            g_n = (up - down) / (2 * epsilon)
            g_a = analytic[k].view(-1)[idx].item()
            errs.append(abs(g_a - g_n) / max(abs(g_a), abs(g_n), 1e-8))
    return np.array(errs)
