"""Adam with global-norm clipping and a stepwise learning-rate decay."""

from __future__ import annotations

import math

import torch


class NonFiniteGradient(FloatingPointError):
    pass


class Adam:
    """Wraps :class:`torch.optim.Adam`.

    Each :meth:`step` clips the global gradient norm to ``clip_norm``, then
    updates with ``lr * decay ** (step // decay_every)`` where ``step`` counts
    completed updates.
    """

    def __init__(self, params, lr=1e-3, decay=0.9, decay_every=6000, clip_norm=5.0,
                 betas=(0.9, 0.999), eps=1e-8):
        self.params = [p for p in params if p.requires_grad]
        self.base_lr = lr
        self.decay = decay
        self.decay_every = decay_every
        self.clip_norm = clip_norm
        self.step_count = 0
        self.opt = torch.optim.Adam(self.params, lr=lr, betas=betas, eps=eps)
        self.last_grad_norm = 0.0

    def effective_lr(self, step=None) -> float:
        step = self.step_count if step is None else step
        return self.base_lr * self.decay ** (step // self.decay_every)

    def zero_grad(self):
        self.opt.zero_grad(set_to_none=False)

    def step(self):
        for p in self.params:
            if p.grad is None:
                p.grad = torch.zeros_like(p)
        norm = torch.linalg.vector_norm(
            torch.stack([torch.linalg.vector_norm(p.grad) for p in self.params])
        ).item()
        if not math.isfinite(norm):
            raise NonFiniteGradient(f"gradient norm is {norm}")
        self.last_grad_norm = norm
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / norm
            for p in self.params:
                p.grad.mul_(scale)
        lr = self.effective_lr()
        for group in self.opt.param_groups:
            group["lr"] = lr
        self.opt.step()
        self.step_count += 1

    def state_dict(self):
        return {
            "adam": self.opt.state_dict(),
            "step_count": self.step_count,
            "base_lr": self.base_lr,
            "decay": self.decay,
            "decay_every": self.decay_every,
            "clip_norm": self.clip_norm,
        }

    def load_state_dict(self, state):
        self.opt.load_state_dict(state["adam"])
        self.step_count = state["step_count"]
        self.base_lr = state["base_lr"]
        self.decay = state["decay"]
        self.decay_every = state["decay_every"]
        self.clip_norm = state["clip_norm"]
