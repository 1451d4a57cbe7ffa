"""Supervised training and the regenerate-then-retrain loop."""

from __future__ import annotations

import csv
import random
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import torch

from ..datagen.dataset import compute_stats
from ..model import ModelConfig, build_model, make_batch
from ..nn import Adam, default_dtype
from .evaluation import evaluate, regenerate


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 16
    lr: float = 1e-3
    decay: float = 0.9
    decay_every: int = 6000
    clip_norm: float = 5.0
    seed: int = 0
    bucket_batches: int = 32     # batches drawn from one length-sorted pool
    log_every: int = 50

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)


def batch_schedule(n: int, lengths, cfg: TrainConfig, rng: random.Random):
    """Endless stream of index lists; each epoch is shuffled, then length-bucketed."""
    while True:
        order = list(range(n))
        rng.shuffle(order)
        pool = cfg.batch_size * cfg.bucket_batches
        batches = []
        for start in range(0, n, pool):
            chunk = sorted(order[start:start + pool], key=lambda i: lengths[i])
            batches.extend(chunk[j:j + cfg.batch_size] for j in range(0, len(chunk), cfg.batch_size))
        rng.shuffle(batches)
        yield from batches


def train_model(model, episodes, cfg: TrainConfig, log=None, dtype=None):
    """Teacher-forced training; returns the list of logged loss rows."""
    episodes = list(episodes)
    dtype = dtype or model.tok_emb.dtype
    torch.manual_seed(cfg.seed)
    torch.set_flush_denormal(True)   # tiny activations otherwise slow CPU kernels ~2x
    rng = random.Random(f"{cfg.seed}/batches")
    opt = Adam(list(model.parameters()), lr=cfg.lr, decay=cfg.decay,
               decay_every=cfg.decay_every, clip_norm=cfg.clip_norm)
    value_range = model.cfg.value_range
    schedule = batch_schedule(len(episodes), [ep.n_tokens for ep in episodes], cfg, rng)
    rows = []
    acc = {"prog": 0.0, "exec": 0.0, "op": 0.0, "total": 0.0}
    seen = 0
    started = time.time()
    model.train()
    for step in range(1, cfg.steps + 1):
        idx = next(schedule)
        batch = make_batch([episodes[i] for i in idx], value_range, dtype)
        opt.zero_grad()
        report = model(batch)
        report.total.backward()
        opt.step()
        for k, v in report.as_floats().items():
            acc[k] += v
        seen += 1
        if step % cfg.log_every == 0 or step == cfg.steps:
            row = {"step": step, **{k: v / seen for k, v in acc.items()},
                   "lr": opt.effective_lr(step - 1), "grad_norm": opt.last_grad_norm,
                   "seconds": time.time() - started}
            rows.append(row)
            if log:
                log(row)
            acc = dict.fromkeys(acc, 0.0)
            seen = 0
    model.eval()
    return rows


def write_loss_csv(rows, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["step", "prog", "exec", "op", "total", "lr", "grad_norm", "seconds"]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in cols})


@dataclass
class IterationReport:
    iteration: int
    eval_report: object
    train_stats: object
    regen_report: object = None
    losses: list = None


def retrain_loop(train_set, test_set, model_cfg: ModelConfig, train_cfg: TrainConfig,
                 iterations: int = 1, regen_beam: int = 8, eval_beam: int = 8,
                 warm_start: bool = False, dtype=None, log=None, first_model=None,
                 workers: int = 1):
    """Train, then ``iterations`` rounds of regenerate + retrain.

    Returns (models, reports, final dataset); entry 0 is plain training on ``train_set``.
    ``first_model`` skips the initial training when a trained model is at hand.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    dtype = dtype or default_dtype()
    data = train_set
    models, reports = [], []
    model, losses = first_model, None
    if model is None:
        model = build_model(model_cfg, dtype)
        losses = train_model(model, data, train_cfg, log=log)
    models.append(model)
    report = evaluate(model, test_set, eval_beam, workers=workers)
    reports.append(IterationReport(0, report, compute_stats(data), losses=losses))
    for it in range(1, iterations + 1):
        data, regen = regenerate(model, data, regen_beam, workers=workers)
        nxt = build_model(model_cfg, dtype)
        if warm_start:
            nxt.load_state_dict(model.state_dict())
        losses = train_model(nxt, data, train_cfg, log=log)
        model = nxt
        models.append(model)
        report = evaluate(model, test_set, eval_beam, workers=workers)
        reports.append(IterationReport(it, report, compute_stats(data), regen, losses))
    return models, reports, data
