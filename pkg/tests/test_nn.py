import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from lasynth.diagnostics import run_grad_checks
from lasynth.nn import (
    Adam, BiLSTM, BilinearAttention, CheckpointMismatch, EmptyKeySet, LSTMCell, NonFiniteGradient,
    ShapeMismatch, StackedLSTM, attention, attention_many, bilstm_reference, concat, cross_entropy,
    default_dtype, grad_check, load_checkpoint, lstm_step, matmul, maxpool_over_set, save_checkpoint,
    uniform_,
)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _numpy_lstm(x, h, c, w_ih, w_hh, b):
    g = x @ w_ih.T + h @ w_hh.T + b
    i, f, gg, o = np.split(g, 4, axis=-1)
    c2 = _sigmoid(f) * c + _sigmoid(i) * np.tanh(gg)
    return _sigmoid(o) * np.tanh(c2), c2


@pytest.fixture
def gen():
    return torch.Generator().manual_seed(0)


def test_lstm_cell_matches_numpy(gen):
    cell = LSTMCell(3, 4).double()
    uniform_(cell.parameters(), 0.5, generator=gen)
    x, h, c = (torch.randn(2, n, generator=gen, dtype=torch.float64) for n in (3, 4, 4))
    h2, c2 = lstm_step(cell, x, h, c)
    rh, rc = _numpy_lstm(x.numpy(), h.numpy(), c.numpy(), cell.weight_ih.detach().numpy(),
                         cell.weight_hh.detach().numpy(), cell.bias.detach().numpy())
    np.testing.assert_allclose(h2.detach().numpy(), rh, rtol=1e-12)
    np.testing.assert_allclose(c2.detach().numpy(), rc, rtol=1e-12)


def test_lstm_cell_rejects_wrong_width():
    cell = LSTMCell(3, 4)
    with pytest.raises(ShapeMismatch):
        cell(torch.zeros(1, 5), torch.zeros(1, 4), torch.zeros(1, 4))


def test_stacked_lstm_feeds_layers_in_order(gen):
    st_ = StackedLSTM(3, 4, 2).double()
    uniform_(st_.parameters(), 0.3, generator=gen)
    x = torch.randn(2, 3, generator=gen, dtype=torch.float64)
    z = [torch.zeros(2, 4, dtype=torch.float64)] * 2
    top, (hs, cs) = st_(x, (z, z))
    h0, _ = st_.cells[0](x, z[0], z[0])
    h1, _ = st_.cells[1](h0, z[1], z[1])
    assert torch.equal(top, h1) and torch.equal(hs[0], h0)


@pytest.mark.parametrize("layers", [1, 2])
def test_fused_bilstm_matches_cell_composition(gen, layers):
    enc = BiLSTM(3, 5, layers).double()
    uniform_(enc.parameters(), 0.3, generator=gen)
    seq = torch.randn(2, 4, 6, 3, generator=gen, dtype=torch.float64)
    out = enc(seq)
    assert out.shape == (2, 4, 6, 10)
    torch.testing.assert_close(out, bilstm_reference(enc, seq), rtol=1e-10, atol=1e-12)


def test_bilstm_backward_half_sees_the_future(gen):
    enc = BiLSTM(2, 3).double()
    uniform_(enc.parameters(), 0.5, generator=gen)
    seq = torch.randn(1, 4, 2, generator=gen, dtype=torch.float64)
    changed = seq.clone()
    changed[0, -1] += 1.0
    a, b = enc(seq), enc(changed)
    assert torch.equal(a[0, 0, :3], b[0, 0, :3])       # forward half of position 0 unchanged
    assert not torch.equal(a[0, 0, 3:], b[0, 0, 3:])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 1000))
def test_attention_weights_are_a_distribution(n_keys, batch, seed):
    g = torch.Generator().manual_seed(seed)
    attn = BilinearAttention(3, 4).double()
    uniform_(attn.parameters(), 1.0, generator=g)
    q = torch.randn(batch, 3, generator=g, dtype=torch.float64)
    k = torch.randn(batch, n_keys, 4, generator=g, dtype=torch.float64)
    ctx, w = attention(attn, q, k)
    assert torch.all(w >= 0)
    torch.testing.assert_close(w.sum(-1), torch.ones(batch, dtype=torch.float64))
    # context lies in the convex hull of the values: check against explicit sum
    torch.testing.assert_close(ctx, (w.unsqueeze(-1) * k).sum(-2))


def test_attention_many_matches_per_query(gen):
    attn = BilinearAttention(3, 4).double()
    uniform_(attn.parameters(), 1.0, generator=gen)
    q = torch.randn(2, 5, 3, generator=gen, dtype=torch.float64)
    k = torch.randn(2, 6, 4, generator=gen, dtype=torch.float64)
    block, _ = attention_many(attn, q, k)
    for t in range(5):
        single, _ = attention(attn, q[:, t], k)
        torch.testing.assert_close(block[:, t], single)


def test_attention_mask_and_shared_keys(gen):
    attn = BilinearAttention(2, 2).double()
    uniform_(attn.parameters(), 1.0, generator=gen)
    keys = torch.randn(3, 2, generator=gen, dtype=torch.float64)
    q = torch.randn(4, 2, generator=gen, dtype=torch.float64)
    shared = attn.scores(q, keys)
    batched = attn.scores(q, keys.expand(4, 3, 2))
    torch.testing.assert_close(shared, batched)
    mask = torch.tensor([True, False, True])
    _, w = attention(attn, q, keys.expand(4, 3, 2), mask=mask)
    assert torch.all(w[:, 1] == 0)


def test_attention_errors():
    attn = BilinearAttention(2, 3)
    with pytest.raises(ShapeMismatch):
        attention(attn, torch.zeros(1, 2), torch.zeros(1, 4, 2))
    with pytest.raises(EmptyKeySet):
        attention(attn, torch.zeros(1, 2), torch.zeros(1, 0, 3))


def test_shape_checked_helpers():
    with pytest.raises(ShapeMismatch):
        matmul(torch.zeros(2, 3), torch.zeros(2, 3))
    with pytest.raises(ShapeMismatch):
        concat([torch.zeros(2, 3), torch.zeros(3, 3)])
    assert maxpool_over_set(torch.tensor([[1.0, 5.0], [3.0, 2.0]]), 0).tolist() == [3.0, 5.0]


def test_cross_entropy_hard_and_soft_targets():
    logits = torch.tensor([[2.0, 0.0, -1.0], [0.5, 0.5, 0.5]], dtype=torch.float64)
    target = torch.tensor([0, 2])
    lse = np.log(np.exp(logits.numpy()).sum(-1))
    expect = np.mean([lse[0] - 2.0, lse[1] - 0.5])
    assert cross_entropy(logits, target).item() == pytest.approx(expect, rel=1e-12)
    soft = torch.nn.functional.one_hot(target, 3).double()
    assert cross_entropy(logits, soft).item() == pytest.approx(expect, rel=1e-12)
    masked = cross_entropy(logits, target, mask=torch.tensor([True, False]))
    assert masked.item() == pytest.approx(lse[0] - 2.0, rel=1e-12)
    with pytest.raises(ShapeMismatch):
        cross_entropy(logits, torch.tensor([0]))


def test_default_dtype_env(monkeypatch):
    monkeypatch.setenv("LASYNTH_PRECISION", "f64")
    assert default_dtype() is torch.float64
    monkeypatch.setenv("LASYNTH_PRECISION", "f16")
    with pytest.raises(ValueError):
        default_dtype()


# -- optimizer --

class _NumpyAdam:
    """Textbook Adam with global-norm clipping and stepwise decay."""

    def __init__(self, params, lr, decay, decay_every, clip, b1=0.9, b2=0.999, eps=1e-8):
        self.p = [x.copy() for x in params]
        self.m = [np.zeros_like(x) for x in params]
        self.v = [np.zeros_like(x) for x in params]
        self.t = 0
        self.lr, self.decay, self.every, self.clip = lr, decay, decay_every, clip
        self.b1, self.b2, self.eps = b1, b2, eps

    def step(self, grads):
        norm = math.sqrt(sum(float((g * g).sum()) for g in grads))
        if norm > self.clip:
            grads = [g * (self.clip / norm) for g in grads]
        lr = self.lr * self.decay ** (self.t // self.every)
        self.t += 1
        for i, g in enumerate(grads):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mh = self.m[i] / (1 - self.b1 ** self.t)
            vh = self.v[i] / (1 - self.b2 ** self.t)
            self.p[i] = self.p[i] - lr * mh / (np.sqrt(vh) + self.eps)


def test_adam_matches_numpy_oracle():
    rng = np.random.default_rng(0)
    init = [rng.normal(size=(3, 2)), rng.normal(size=4)]
    params = [torch.tensor(x, requires_grad=True) for x in init]
    opt = Adam(params, lr=0.05, decay=0.5, decay_every=3, clip_norm=1.0)
    ref = _NumpyAdam(init, 0.05, 0.5, 3, 1.0)
    for _ in range(10):
        grads = [rng.normal(scale=2.0, size=x.shape) for x in init]
        opt.zero_grad()
        for p, g in zip(params, grads):
            p.grad = torch.tensor(g)
        opt.step()
        ref.step(grads)
    for p, r in zip(params, ref.p):
        np.testing.assert_allclose(p.detach().numpy(), r, rtol=1e-10, atol=1e-12)


def test_lr_schedule_is_stepwise():
    opt = Adam([torch.zeros(1, requires_grad=True)], lr=1e-3, decay=0.9, decay_every=6000)
    assert opt.effective_lr(0) == 1e-3
    assert opt.effective_lr(5999) == 1e-3
    assert opt.effective_lr(6000) == pytest.approx(9e-4)
    assert opt.effective_lr(12000) == pytest.approx(8.1e-4)


def test_clipping_bounds_the_applied_gradient():
    p = torch.zeros(4, requires_grad=True, dtype=torch.float64)
    opt = Adam([p], lr=1.0, clip_norm=5.0)
    p.grad = torch.full((4,), 100.0, dtype=torch.float64)
    opt.step()
    assert opt.last_grad_norm == pytest.approx(200.0)
    assert torch.linalg.vector_norm(p.grad).item() == pytest.approx(5.0)


def test_non_finite_gradient_raises():
    p = torch.zeros(2, requires_grad=True)
    opt = Adam([p])
    p.grad = torch.tensor([1.0, float("nan")])
    with pytest.raises(NonFiniteGradient):
        opt.step()


# -- checkpoints --

def test_checkpoint_roundtrip_is_bitwise(tmp_path, gen):
    model = StackedLSTM(3, 4, 2)
    uniform_(model.parameters(), 0.08, generator=gen)
    opt = Adam(model.parameters(), lr=1e-2)
    for p in model.parameters():
        p.grad = torch.ones_like(p)
    opt.step()
    save_checkpoint(tmp_path / "m.pt", model, {"hidden": 4}, opt)
    blob = load_checkpoint(tmp_path / "m.pt")
    other = StackedLSTM(3, 4, 2)
    other.load_state_dict(blob["params"])
    for a, b in zip(model.parameters(), other.parameters()):
        assert torch.equal(a, b)
    opt2 = Adam(other.parameters(), lr=5.0)
    opt2.load_state_dict(blob["optim"])
    assert opt2.step_count == 1 and opt2.base_lr == 1e-2


def test_checkpoint_tamper_is_detected(tmp_path):
    model = LSTMCell(2, 2)
    save_checkpoint(tmp_path / "m.pt", model, {"hidden": 2})
    blob = torch.load(tmp_path / "m.pt", weights_only=False)
    blob["config"]["hidden"] = 3
    torch.save(blob, tmp_path / "m.pt")
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(tmp_path / "m.pt")
    blob["version"] = 99
    torch.save(blob, tmp_path / "m.pt")
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(tmp_path / "m.pt")


# -- gradient checking --

def test_grad_check_detects_a_wrong_gradient():
    x = torch.tensor([0.3, -0.7], dtype=torch.float64, requires_grad=True)

    class Wrong(torch.autograd.Function):
        @staticmethod
        def forward(ctx, v):
            ctx.save_for_backward(v)
            return (v ** 3).sum()

        @staticmethod
        def backward(ctx, g):
            (v,) = ctx.saved_tensors
            return g * 2 * v ** 2          # should be 3 v^2

    assert grad_check(lambda: Wrong.apply(x), [x]) > 0.1
    assert grad_check(lambda: (x ** 3).sum(), [x]) < 1e-8


def test_all_grad_checks_within_tolerance():
    errs = run_grad_checks(seed=0)
    assert any(k.startswith("loss[") for k in errs)
    assert max(errs.values()) <= 1e-4, {k: v for k, v in errs.items() if v > 1e-4}


# -- small closed-form cases --

def test_closed_form_cases():
    from lasynth.nn import softmax
    assert softmax(torch.zeros(3)).tolist() == pytest.approx([1 / 3] * 3)
    x = torch.tensor([[1.0, -2.0]])
    assert torch.equal(maxpool_over_set(x, 0), x[0])
    cell = LSTMCell(2, 3)
    uniform_(cell.parameters(), 0.0)
    h, _ = cell(torch.randn(1, 2), torch.zeros(1, 3), torch.zeros(1, 3))
    assert torch.equal(h, torch.zeros(1, 3))


def test_single_and_identical_keys():
    attn = BilinearAttention(2, 2)
    uniform_(attn.parameters(), 1.0, generator=torch.Generator().manual_seed(1))
    q = torch.randn(1, 2)
    ctx, w = attention(attn, q, torch.tensor([[[0.3, -0.4]]]), torch.tensor([[[5.0, 6.0]]]))
    assert w.tolist() == [[1.0]] and ctx.tolist() == [[5.0, 6.0]]
    keys = torch.tensor([[[0.3, -0.4]] * 3])
    values = torch.tensor([[[1.0, 0.0], [2.0, 0.0], [6.0, 3.0]]])
    ctx, w = attention(attn, q, keys, values)
    torch.testing.assert_close(w, torch.full((1, 3), 1 / 3))
    torch.testing.assert_close(ctx, values.mean(1))


def test_zero_gradient_leaves_parameters_unchanged():
    p = torch.tensor([1.0, -2.0], requires_grad=True)
    opt = Adam([p], lr=0.1)
    opt.zero_grad()
    opt.step()
    assert p.tolist() == [1.0, -2.0] and opt.step_count == 1


def test_gradient_rules_on_simple_functions():
    x = torch.tensor([0.5, -1.5, 2.0], dtype=torch.float64, requires_grad=True)
    (g,) = torch.autograd.grad((x @ x), [x])
    assert torch.equal(g, 2 * x.detach())
    assert grad_check(lambda: (x @ x), [x]) < 1e-8
    assert grad_check(lambda: x.new_tensor(3.0) + 0 * x.sum(), [x]) == 0.0
