"""Finite-difference gradient checks for each layer and the full training loss."""

from __future__ import annotations

from dataclasses import replace

import torch

from .model import ModelConfig, build_model
from .model.propsig import default_features
from .model.batch import Batch
from .nn import (
    BiLSTM, BilinearAttention, LSTMCell, StackedLSTM, attention, attention_many, cross_entropy,
    grad_check, maxpool_over_set, softmax,
)

TINY = ModelConfig(hidden=8, embed=8, layers=1, k_spec=2, list_len=3, vocab_size=12,
                   value_range=(-2, 2), max_decode_len=8)


def tiny_batch(cfg: ModelConfig = TINY, batch=2, length=4, seed=0) -> Batch:
    """Random batch with valid shapes for ``cfg``; tokens avoid PAD/BOS/EOS."""
    g = torch.Generator().manual_seed(seed)
    K, L, nv = cfg.k_spec, cfg.list_len, cfg.n_values
    inputs = torch.randint(0, nv, (batch, K, L), generator=g)
    outputs = torch.randint(0, nv, (batch, K, L), generator=g)
    prog = torch.randint(3, cfg.vocab_size, (batch, length), generator=g)
    lengths = torch.tensor([length + 1] + [length] * (batch - 1))
    T = length + 1
    tok_in = torch.zeros(batch, T, dtype=torch.long)
    tok_out = torch.zeros(batch, T, dtype=torch.long)
    for b in range(batch):
        n = int(lengths[b]) - 1
        tok_in[b, 0] = 1
        tok_in[b, 1:n + 1] = prog[b, :n]
        tok_out[b, :n] = prog[b, :n]
        tok_out[b, n] = 2
    mask = torch.arange(T).unsqueeze(0) < lengths.unsqueeze(1)
    F = len(default_features(cfg.value_range))
    sigs = torch.randint(0, 2, (batch, K, L, F), generator=g).double()
    return Batch(inputs, outputs, tok_in, tok_out, mask, lengths, sigs)


def _layer_checks(g, eps):
    d = torch.float64
    out = {}

    def rand(*shape):
        return torch.randn(*shape, generator=g, dtype=d, requires_grad=True)

    cell = LSTMCell(4, 3).double()
    x, h, c = rand(2, 4), rand(2, 3), rand(2, 3)
    out["lstm_cell"] = grad_check(lambda: sum(t.pow(2).sum() for t in cell(x, h, c)),
                                  [x, h, c, *cell.parameters()], eps=eps)

    stack = StackedLSTM(4, 3, 2).double()
    hs, cs = [rand(2, 3), rand(2, 3)], [rand(2, 3), rand(2, 3)]
    out["stacked_lstm"] = grad_check(lambda: stack(x, (hs, cs))[0].pow(2).sum(),
                                     [x, *hs, *cs, *stack.parameters()], eps=eps)

    bi = BiLSTM(4, 3, 2).double()
    seq = rand(2, 5, 4)
    out["bilstm"] = grad_check(lambda: bi(seq).pow(2).sum(), [seq, *bi.parameters()], eps=eps)

    att = BilinearAttention(3, 4).double()
    q, k, v = rand(2, 3), rand(2, 5, 4), rand(2, 5, 6)
    out["attention"] = grad_check(lambda: attention(att, q, k, v)[0].pow(2).sum(),
                                  [q, k, v, att.weight], eps=eps)
    qs = rand(2, 3, 3)
    mask = torch.ones(3, 5, dtype=torch.bool).tril()
    out["attention_many"] = grad_check(
        lambda: attention_many(att, qs, k, mask=mask)[0].pow(2).sum(), [qs, k, att.weight], eps=eps)

    logits = rand(3, 7)
    ids = torch.tensor([0, 3, 6])
    dist = torch.softmax(torch.randn(3, 7, generator=g, dtype=d), -1)
    out["cross_entropy_ids"] = grad_check(lambda: cross_entropy(logits, ids), [logits], eps=eps)
    out["cross_entropy_dist"] = grad_check(lambda: cross_entropy(logits, dist), [logits], eps=eps)
    out["softmax"] = grad_check(lambda: softmax(logits).pow(2).sum(), [logits], eps=eps)
    pool = rand(2, 5, 3)
    out["maxpool"] = grad_check(lambda: maxpool_over_set(pool, 1).pow(2).sum(), [pool], eps=eps)
    return out


def run_grad_checks(seed: int = 0, eps: float = 1e-4, max_coords: int | None = 8,
                    ablations=("none", "no-executor", "no-partial-executor", "no-op-predictor",
                               "no-decode-attention"),
                    baselines=("property_signatures",)) -> dict:
    """Max relative error per target; targets are layers, model pieces and full losses."""
    g = torch.Generator().manual_seed(seed)
    out = _layer_checks(g, eps)
    batch = tiny_batch(seed=seed)

    model = build_model(TINY, torch.float64)
    s_in = torch.randn(2, 2, 2 * TINY.hidden, generator=g, dtype=torch.float64, requires_grad=True)
    s_out = torch.randn(2, 2, 2 * TINY.hidden, generator=g, dtype=torch.float64, requires_grad=True)
    out["op_predictor"] = grad_check(
        lambda: model.predict_op(s_in, s_out)[0].pow(2).sum(),
        [s_in, s_out, model.val_emb, model.op_emb, *model.attn_rows_in.parameters(),
         *model.attn_rows_out.parameters()], eps=eps)
    latent = torch.randn(2, 2, TINY.list_len, TINY.embed, generator=g, dtype=torch.float64,
                         requires_grad=True)
    h_top = torch.randn(2, 2, TINY.hidden, generator=g, dtype=torch.float64, requires_grad=True)
    out["latent_executor"] = grad_check(
        lambda: model.latent_exec_step(latent, h_top)[0].pow(2).sum(),
        [latent, h_top, model.val_emb, *model.executor.parameters(), *model.exec_proj.parameters()],
        eps=eps)

    configs = [(f"loss[{a}]", TINY.with_ablation(a)) for a in ablations]
    configs += [(f"loss[{b}]", replace(TINY, baseline=b)) for b in baselines]
    for name, cfg in configs:
        m = build_model(cfg, torch.float64)
        out[name] = grad_check(lambda: m(batch).total, list(m.parameters()), eps=eps,
                               max_coords=max_coords, generator=g)
    return out
