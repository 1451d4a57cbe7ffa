"""Central-difference gradient checking against autograd."""

from __future__ import annotations

import torch


def _rel_err(a, b, floor):
    return (a - b).abs() / torch.maximum(torch.maximum(a.abs(), b.abs()), torch.full_like(a, floor))


def grad_check(fn, tensors, eps=1e-6, max_coords=None, generator=None, floor=1e-6) -> float:
    """Max relative error between autograd and finite differences of ``fn()``.

    ``fn`` takes no arguments and returns a scalar tensor built from
    ``tensors`` (leaf tensors, ideally float64). ``max_coords`` limits how many
    coordinates per tensor are perturbed; they are chosen with ``generator``.
    """
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    out = fn()
    analytic = torch.autograd.grad(out, tensors, allow_unused=True)
    worst = 0.0
    with torch.no_grad():
        for t, g in zip(tensors, analytic):
            g = torch.zeros_like(t) if g is None else g
            flat = t.view(-1)
            n = flat.numel()
            if max_coords is not None and n > max_coords:
                coords = torch.randperm(n, generator=generator)[:max_coords].tolist()
            else:
                coords = range(n)
            gflat = g.reshape(-1)
            for i in coords:
                orig = flat[i].item()
                flat[i] = orig + eps
                up = fn().item()
                flat[i] = orig - eps
                down = fn().item()
                flat[i] = orig
                num = torch.tensor((up - down) / (2 * eps), dtype=t.dtype)
                worst = max(worst, _rel_err(gflat[i], num, floor).item())
    return worst
