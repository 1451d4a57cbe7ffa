"""Episode -> tensor batching."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..lang.vocab import VOCAB
from .propsig import default_features, property_signature_encode


@dataclass
class Batch:
    inputs: torch.Tensor      # [B, K, L] value indices
    outputs: torch.Tensor     # [B, K, L]
    tok_in: torch.Tensor      # [B, T] BOS + program
    tok_out: torch.Tensor     # [B, T] program + EOS
    mask: torch.Tensor        # [B, T] bool
    lengths: torch.Tensor     # [B] decode steps including EOS
    signatures: torch.Tensor  # [B, K, L, F]

    def __len__(self):
        return self.inputs.shape[0]


def value_index(values, value_range):
    lo, hi = value_range
    for v in values:
        if not lo <= v <= hi:
            raise ValueError(f"value {v} outside {value_range}")
    return [v - lo for v in values]


def signature_tensor(pairs, value_range, dtype=torch.float32):
    feats = default_features(value_range)
    rows = []
    for pair in pairs:
        sig = property_signature_encode(pair, feats)
        rows.append([[float(sig[f][pos]) for f in feats] for pos in range(len(pair[0]))])
    return torch.tensor(rows, dtype=dtype)


def spec_tensors(pairs, value_range, dtype=torch.float32):
    """(inputs [K, L], outputs [K, L], signatures [K, L, F]) for one episode's spec pairs."""
    ins = torch.tensor([value_index(i, value_range) for i, _ in pairs], dtype=torch.long)
    outs = torch.tensor([value_index(o, value_range) for _, o in pairs], dtype=torch.long)
    return ins, outs, signature_tensor(pairs, value_range, dtype)


def make_batch(episodes, value_range=(-4, 4), dtype=torch.float32, tokens=None) -> Batch:
    """Stack episodes; ``tokens`` optionally overrides each episode's program."""
    progs = [list(ep.tokens) for ep in episodes] if tokens is None else [list(t) for t in tokens]
    T = max(len(p) for p in progs) + 1
    B = len(progs)
    tok_in = torch.full((B, T), VOCAB.pad_id, dtype=torch.long)
    tok_out = torch.full((B, T), VOCAB.pad_id, dtype=torch.long)
    lengths = torch.tensor([len(p) + 1 for p in progs], dtype=torch.long)
    for b, p in enumerate(progs):
        tok_in[b, : len(p) + 1] = torch.tensor([VOCAB.bos_id] + p)
        tok_out[b, : len(p) + 1] = torch.tensor(p + [VOCAB.eos_id])
    mask = torch.arange(T).unsqueeze(0) < lengths.unsqueeze(1)
    specs = [spec_tensors(ep.spec, value_range, dtype) for ep in episodes]
    return Batch(
        inputs=torch.stack([s[0] for s in specs]),
        outputs=torch.stack([s[1] for s in specs]),
        tok_in=tok_in,
        tok_out=tok_out,
        mask=mask,
        lengths=lengths,
        signatures=torch.stack([s[2] for s in specs]),
    )
