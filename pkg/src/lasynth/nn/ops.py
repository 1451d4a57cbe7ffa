"""Differentiable building blocks on top of torch autograd.

Recurrent cells are written out gate by gate so they can be checked against
both finite differences and torch's fused LSTM.
"""

from __future__ import annotations

import os

import torch
import torch.nn as tnn
import torch.nn.functional as F

INIT_SCALE = 0.08


class ShapeMismatch(ValueError):
    pass


class EmptyKeySet(ValueError):
    pass


def default_dtype() -> torch.dtype:
    prec = os.environ.get("LASYNTH_PRECISION", "f32").lower()
    if prec in ("f64", "float64", "64"):
        return torch.float64
    if prec in ("f32", "float32", "32"):
        return torch.float32
    raise ValueError(f"LASYNTH_PRECISION must be f32 or f64, got {prec!r}")


def matmul(a, b):
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul {tuple(a.shape)} @ {tuple(b.shape)}")
    return a @ b


def add(a, b):
    try:
        torch.broadcast_shapes(a.shape, b.shape)
    except RuntimeError:
        raise ShapeMismatch(f"add {tuple(a.shape)} + {tuple(b.shape)}") from None
    return a + b


def concat(xs, dim=-1):
    lead = {tuple(x.shape[:-1]) for x in xs} if dim in (-1, xs[0].dim() - 1) else None
    if lead is not None and len(lead) != 1:
        raise ShapeMismatch(f"concat leading dims differ: {sorted(lead)}")
    return torch.cat(xs, dim=dim)


tanh = torch.tanh
sigmoid = torch.sigmoid


def softmax(x, dim=-1, mask=None):
    if mask is not None:
        x = x.masked_fill(~mask, float("-inf"))
    return torch.softmax(x, dim=dim)


def embedding_lookup(table, ids):
    return F.embedding(ids, table)


def maxpool_over_set(x, dim):
    """Elementwise max over the set axis ``dim``."""
    return x.max(dim=dim).values


def cross_entropy(logits, target, mask=None):
    """Mean cross-entropy from unnormalized scores.

    ``target`` holds class ids (same leading shape as ``logits[..., 0]``) or a
    distribution with the same shape as ``logits``. ``mask`` selects which
    leading positions count.
    """
    logp = torch.log_softmax(logits, dim=-1)
    if target.dtype in (torch.int64, torch.int32):
        if target.shape != logits.shape[:-1]:
            raise ShapeMismatch(f"targets {tuple(target.shape)} vs logits {tuple(logits.shape)}")
        nll = -logp.gather(-1, target.unsqueeze(-1)).squeeze(-1)
    else:
        if target.shape != logits.shape:
            raise ShapeMismatch(f"target dist {tuple(target.shape)} vs logits {tuple(logits.shape)}")
        nll = -(target * logp).sum(-1)
    if mask is None:
        return nll.mean()
    mask = mask.to(nll.dtype)
    return (nll * mask).sum() / mask.sum().clamp_min(1.0)


def uniform_(params, scale=INIT_SCALE, generator=None):
    with torch.no_grad():
        for p in params:
            p.uniform_(-scale, scale, generator=generator)


class LSTMCell(tnn.Module):
    """Single LSTM cell; gate layout (input, forget, cell, output)."""

    def __init__(self, input_size, hidden_size):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.weight_ih = tnn.Parameter(torch.empty(4 * hidden_size, input_size))
        self.weight_hh = tnn.Parameter(torch.empty(4 * hidden_size, hidden_size))
        self.bias = tnn.Parameter(torch.empty(4 * hidden_size))

    def forward(self, x, h, c):
        return lstm_step(self, x, h, c)


def lstm_step(cell: LSTMCell, x, h, c):
    if x.shape[-1] != cell.input_size or h.shape[-1] != cell.hidden_size:
        raise ShapeMismatch(
            f"lstm_step input {tuple(x.shape)} hidden {tuple(h.shape)} for cell "
            f"({cell.input_size}->{cell.hidden_size})"
        )
    return lstm_gates(x, h, c, cell.weight_ih, cell.weight_hh, cell.bias)


def lstm_gates(x, h, c, w_ih, w_hh, bias):
    gates = x @ w_ih.t() + h @ w_hh.t() + bias
    i, f, g, o = gates.chunk(4, dim=-1)
    i, f, o = torch.sigmoid(i), torch.sigmoid(f), torch.sigmoid(o)
    c2 = f * c + i * torch.tanh(g)
    h2 = o * torch.tanh(c2)
    return h2, c2


class StackedLSTM(tnn.Module):
    """Multi-layer unidirectional LSTM advanced one step at a time."""

    def __init__(self, input_size, hidden_size, layers):
        super().__init__()
        self.cells = tnn.ModuleList(
            LSTMCell(input_size if k == 0 else hidden_size, hidden_size) for k in range(layers)
        )

    def forward(self, x, state):
        hs, cs = state
        new_h, new_c = [], []
        for k, cell in enumerate(self.cells):
            h, c = cell(x, hs[k], cs[k])
            new_h.append(h)
            new_c.append(c)
            x = h
        return x, (new_h, new_c)


class BiLSTM(tnn.Module):
    """Bidirectional encoder; per-position output is [forward; backward]."""

    def __init__(self, input_size, hidden_size, layers=1):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.rnn = tnn.LSTM(input_size, hidden_size, num_layers=layers,
                            batch_first=True, bidirectional=True)

    @property
    def output_size(self):
        return 2 * self.hidden_size

    def forward(self, seq):
        return bilstm_encode(self, seq)


def bilstm_encode(enc: BiLSTM, seq):
    """Encode ``seq`` of shape [..., length, input] to [..., length, 2*hidden]."""
    if seq.shape[-1] != enc.input_size:
        raise ShapeMismatch(f"bilstm input {tuple(seq.shape)} expects width {enc.input_size}")
    lead = seq.shape[:-2]
    flat = seq.reshape(-1, seq.shape[-2], seq.shape[-1])
    out, _ = enc.rnn(flat)
    return out.reshape(*lead, seq.shape[-2], out.shape[-1])


def bilstm_reference(enc: BiLSTM, seq):
    """Same as :func:`bilstm_encode` but composed from explicit cell steps (slow)."""
    rnn = enc.rnn
    x = seq
    H = enc.hidden_size
    for layer in range(rnn.num_layers):
        outs = []
        for suffix, order in (("", range(x.shape[-2])), ("_reverse", reversed(range(x.shape[-2])))):
            w_ih = getattr(rnn, f"weight_ih_l{layer}{suffix}")
            w_hh = getattr(rnn, f"weight_hh_l{layer}{suffix}")
            bias = getattr(rnn, f"bias_ih_l{layer}{suffix}") + getattr(rnn, f"bias_hh_l{layer}{suffix}")
            h = x.new_zeros(*x.shape[:-2], H)
            c = x.new_zeros(*x.shape[:-2], H)
            states = [None] * x.shape[-2]
            for t in order:
                h, c = lstm_gates(x[..., t, :], h, c, w_ih, w_hh, bias)
                states[t] = h
            outs.append(torch.stack(states, dim=-2))
        x = torch.cat(outs, dim=-1)
    return x


class BilinearAttention(tnn.Module):
    """Scores ``q^T W k``; softmax over keys; context is the weighted sum of values."""

    def __init__(self, query_size, key_size):
        super().__init__()
        self.query_size = query_size
        self.key_size = key_size
        self.weight = tnn.Parameter(torch.empty(query_size, key_size))

    def scores(self, query, keys):
        if query.shape[-1] != self.query_size or keys.shape[-1] != self.key_size:
            raise ShapeMismatch(
                f"attention query {tuple(query.shape)} keys {tuple(keys.shape)} "
                f"for ({self.query_size}x{self.key_size})"
            )
        if keys.shape[-2] == 0:
            raise EmptyKeySet("attention over an empty key set")
        projected = query @ self.weight                      # [..., Dk]
        if keys.dim() == 2:
            return projected @ keys.T
        return (keys @ projected.unsqueeze(-1)).squeeze(-1)  # [..., N]

    def scores_many(self, queries, keys):
        """Scores for a block of queries [..., Tq, Dq] against keys [..., Tk, Dk] -> [..., Tq, Tk]."""
        if queries.shape[-1] != self.query_size or keys.shape[-1] != self.key_size:
            raise ShapeMismatch(
                f"attention queries {tuple(queries.shape)} keys {tuple(keys.shape)} "
                f"for ({self.query_size}x{self.key_size})"
            )
        if keys.shape[-2] == 0:
            raise EmptyKeySet("attention over an empty key set")
        return (queries @ self.weight) @ keys.transpose(-1, -2)

    def forward(self, query, keys, values=None, mask=None):
        return attention(self, query, keys, values, mask)


def attention(attn: BilinearAttention, query, keys, values=None, mask=None):
    """Returns (context, weights)."""
    values = keys if values is None else values
    if values.shape[-2] != keys.shape[-2]:
        raise ShapeMismatch(f"{keys.shape[-2]} keys but {values.shape[-2]} values")
    w = softmax(attn.scores(query, keys), dim=-1, mask=mask)
    ctx = (w.unsqueeze(-2) @ values).squeeze(-2)
    return ctx, w


def attention_many(attn: BilinearAttention, queries, keys, values=None, mask=None):
    """Block form of :func:`attention`: every query row attends over the same keys."""
    values = keys if values is None else values
    if values.shape[-2] != keys.shape[-2]:
        raise ShapeMismatch(f"{keys.shape[-2]} keys but {values.shape[-2]} values")
    w = softmax(attn.scores_many(queries, keys), dim=-1, mask=mask)
    return w @ values, w
