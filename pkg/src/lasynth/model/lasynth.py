"""Program decoder with latent execution, operation predictor and ablations."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import torch
import torch.nn as tnn

from ..lang.vocab import VOCAB
from ..nn.ops import (
    BiLSTM, BilinearAttention, StackedLSTM, attention, attention_many, concat, cross_entropy,
    embedding_lookup, maxpool_over_set, uniform_,
)
from .batch import Batch
from .config import ModelConfig
from .optable import OpTable, build_op_table
from .propsig import default_features


@dataclass
class DecoderState:
    h: list                   # per layer [N, K, H]
    c: list
    latent: torch.Tensor      # current input estimate, [N, K, L, E]
    out_raw: torch.Tensor     # output-list encoder states, [N, K, L, 2H]
    token_keys: torch.Tensor  # embeddings of tokens fed so far, [N, t, E]
    tokens: list              # fed token ids per row
    enc_in: torch.Tensor | None = None
    enc_out: torch.Tensor | None = None

    @property
    def step(self) -> int:
        return self.token_keys.shape[1]


@dataclass
class StepAux:
    m: torch.Tensor                   # pooled vector [N, H]
    h_top: torch.Tensor               # [N, K, H]
    s_in: torch.Tensor
    s_out: torch.Tensor
    wi_logits: torch.Tensor | None = None
    wo_logits: torch.Tensor | None = None
    op_probs: torch.Tensor | None = None
    exec_logits: torch.Tensor | None = None
    value_probs: torch.Tensor | None = None


@dataclass
class LossReport:
    prog: torch.Tensor
    exec: torch.Tensor
    op: torch.Tensor
    extras: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.prog + self.exec + self.op

    def as_floats(self) -> dict:
        return {
            "prog": self.prog.item(), "exec": self.exec.item(), "op": self.op.item(),
            "total": self.total.item(),
        }


class LaSynth(tnn.Module):
    def __init__(self, cfg: ModelConfig, table: OpTable | None = None):
        super().__init__()
        self.cfg = cfg
        E, H, NL = cfg.embed, cfg.hidden, cfg.layers
        H2 = 2 * H
        self.table = table or build_op_table(cfg.value_range)
        self.tok_emb = tnn.Parameter(torch.empty(cfg.vocab_size, E))      # E_p
        self.val_emb = tnn.Parameter(torch.empty(cfg.n_values, E))        # E_io
        self.op_emb = tnn.Parameter(torch.empty(len(self.table.ops), E))  # E_op

        if cfg.baseline == "property_signatures":
            self.n_features = len(default_features(cfg.value_range))
            self.sig_enc = BiLSTM(self.n_features, H, NL)
        else:
            self.enc_in = BiLSTM(E, H, NL)
            self.enc_out = BiLSTM(E, H, NL)
            self.out_in_attn = BilinearAttention(H2, H2)
            self.out_mix = tnn.Linear(2 * H2, H2)

        self.attn_out = BilinearAttention(H, H2)
        self.attn_in = BilinearAttention(H + H2, H2)
        self.decoder = StackedLSTM(E + 2 * H2, H, NL)

        pool_in = H + 2 * H2
        if cfg.use_op_predictor:
            self.attn_rows_in = BilinearAttention(H2, E)
            self.attn_rows_out = BilinearAttention(H2, E)
            pool_in += E
        self.pool = tnn.Linear(pool_in, H)

        if cfg.use_decode_attention:
            self.tok_attn = BilinearAttention(H, E)
            self.tok_mix = tnn.Linear(H + E, H)
        self.out_proj = tnn.Linear(H, cfg.vocab_size)                     # V

        if cfg.any_executor:
            self.executor = BiLSTM(E + H, H, NL)                          # LSTM_E
            self.exec_proj = tnn.Linear(H2, cfg.n_values)                 # W_E

        lo = cfg.value_range[0]
        self.register_buffer("row_in", torch.tensor([v - lo for v in self.table.row_inputs]))
        self.register_buffer("row_out", torch.tensor([v - lo for v in self.table.row_outputs]))
        self.register_buffer("row_op", torch.tensor(self.table.row_ops))

        gen = torch.Generator().manual_seed(cfg.seed)
        uniform_(self.parameters(), cfg.init_scale, generator=gen)

    # -- encoders --

    def encode_io(self, latent, out_raw):
        """Encodings of (current input estimate, output) for every pair."""
        enc_in = self.enc_in(latent)
        ctx, _ = attention_many(self.out_in_attn, out_raw, enc_in)
        enc_out = torch.tanh(self.out_mix(concat([out_raw, ctx])))
        return enc_in, enc_out

    def init_state(self, inputs, outputs, signatures=None) -> DecoderState:
        """Decoder state before any token; ``inputs``/``outputs`` are [N, K, L] value ids."""
        cfg = self.cfg
        N, K, _ = inputs.shape
        dtype = self.tok_emb.dtype
        zeros = [self.tok_emb.new_zeros(N, K, cfg.hidden) for _ in range(cfg.layers)]
        latent = embedding_lookup(self.val_emb, inputs)
        if cfg.baseline == "property_signatures":
            enc = self.sig_enc(signatures.to(dtype))
            out_raw, enc_in, enc_out = enc, enc, enc
        else:
            out_raw = self.enc_out(embedding_lookup(self.val_emb, outputs))
            enc_in, enc_out = self.encode_io(latent, out_raw)
        return DecoderState(
            h=zeros, c=list(zeros), latent=latent, out_raw=out_raw,
            token_keys=self.tok_emb.new_zeros(N, 0, cfg.embed),
            tokens=[[] for _ in range(N)], enc_in=enc_in, enc_out=enc_out,
        )

    # -- per-step pieces --

    def predict_op(self, s_in, s_out):
        """Attention over table rows; returns (op vector, wi logits, wo logits, P[op row])."""
        rows_in = embedding_lookup(self.val_emb, self.row_in)
        rows_out = embedding_lookup(self.val_emb, self.row_out)
        wi_logits = self.attn_rows_in.scores(s_in, rows_in)
        wo_logits = self.attn_rows_out.scores(s_out, rows_out)
        prod = (torch.softmax(wi_logits, -1) * torch.softmax(wo_logits, -1)).clamp_min(self.cfg.op_eps)
        probs = prod / prod.sum(-1, keepdim=True)
        op_vec = probs @ embedding_lookup(self.op_emb, self.row_op)
        return op_vec, wi_logits, wo_logits, probs

    def latent_exec_step(self, latent, h_top):
        """Next input estimate from the previous one and the decoder state."""
        L = latent.shape[-2]
        h_rep = h_top.unsqueeze(-2).expand(*h_top.shape[:-1], L, h_top.shape[-1])
        exec_states = self.executor(concat([latent, h_rep]))
        logits = self.exec_proj(exec_states)
        probs = torch.softmax(logits, -1)
        return probs @ self.val_emb, logits, probs

    def _core(self, state: DecoderState, prev_tokens):
        """Recurrent part of one step: consumes ``prev_tokens`` [N]."""
        cfg = self.cfg
        if state.enc_in is None:
            state.enc_in, state.enc_out = self.encode_io(state.latent, state.out_raw)
        h_prev = state.h[-1]
        s_out, _ = attention(self.attn_out, h_prev, state.enc_out)
        s_in, _ = attention(self.attn_in, concat([h_prev, s_out]), state.enc_in)

        K = h_prev.shape[1]
        tok = embedding_lookup(self.tok_emb, prev_tokens)
        x = concat([tok.unsqueeze(1).expand(-1, K, -1), s_in, s_out])
        h_top, (hs, cs) = self.decoder(x, (state.h, state.c))

        aux = StepAux(m=None, h_top=h_top, s_in=s_in, s_out=s_out)
        feats = [h_top, s_in, s_out]
        if cfg.use_op_predictor:
            op_vec, aux.wi_logits, aux.wo_logits, aux.op_probs = self.predict_op(s_in, s_out)
            feats.append(op_vec)
        aux.m = maxpool_over_set(torch.tanh(self.pool(concat(feats))), dim=1)

        latent, enc_in, enc_out = state.latent, state.enc_in, state.enc_out
        if cfg.use_executor:
            latent, aux.exec_logits, aux.value_probs = self.latent_exec_step(state.latent, h_top)
            enc_in = enc_out = None
        new_state = DecoderState(
            h=hs, c=cs, latent=latent, out_raw=state.out_raw,
            token_keys=concat([state.token_keys, tok.unsqueeze(1)], dim=1),
            tokens=[t + [int(p)] for t, p in zip(state.tokens, prev_tokens.tolist())],
            enc_in=enc_in, enc_out=enc_out,
        )
        return new_state, aux

    def readout(self, m, keys, mask=None):
        """Token logits from pooled vectors ``m`` [..., T, H] and token keys [..., T', E]."""
        if not self.cfg.use_decode_attention:
            return self.out_proj(m)
        ctx, _ = attention_many(self.tok_attn, m, keys, mask=mask)
        d = torch.tanh(self.tok_mix(concat([m, ctx])))
        return self.out_proj(d)

    def decoder_step(self, state: DecoderState, prev_tokens):
        """Advance one token; returns (new state, logits [N, vocab], aux)."""
        new_state, aux = self._core(state, prev_tokens)
        logits = self.readout(aux.m.unsqueeze(1), new_state.token_keys).squeeze(1)
        return new_state, logits, aux

    def reorder(self, state: DecoderState, index) -> DecoderState:
        idx = torch.as_tensor(index, dtype=torch.long)

        def pick(t):
            return None if t is None else t.index_select(0, idx)

        return DecoderState(
            h=[pick(t) for t in state.h], c=[pick(t) for t in state.c],
            latent=pick(state.latent), out_raw=pick(state.out_raw),
            token_keys=pick(state.token_keys),
            tokens=[list(state.tokens[i]) for i in idx.tolist()],
            enc_in=pick(state.enc_in), enc_out=pick(state.enc_out),
        )

    # -- training objective --

    def run_teacher_forced(self, batch: Batch):
        """Returns (logits [B, T, V], per-step aux list, initial state)."""
        state = self.init_state(batch.inputs, batch.outputs, batch.signatures)
        init = state
        auxes = []
        for t in range(batch.tok_in.shape[1]):
            state, aux = self._core(state, batch.tok_in[:, t])
            auxes.append(aux)
        m = torch.stack([a.m for a in auxes], dim=1)
        T = m.shape[1]
        causal = torch.ones(T, T, dtype=torch.bool).tril()
        logits = self.readout(m, state.token_keys, mask=causal)
        return logits, auxes, init

    def final_exec_logits(self, batch: Batch, auxes, init: DecoderState):
        """Executor logits after the last program token, [B, K, L, V]; None without executor."""
        cfg = self.cfg
        last = (batch.lengths - 1).view(-1, 1, 1, 1, 1)
        if cfg.use_executor:
            stacked = torch.stack([a.exec_logits for a in auxes], dim=1)     # [B, T, K, L, V]
            idx = last.expand(-1, 1, *stacked.shape[2:])
            return stacked.gather(1, idx).squeeze(1)
        if cfg.final_executor_only:
            h_all = torch.stack([a.h_top for a in auxes], dim=1)             # [B, T, K, H]
            idx = last.squeeze(-1).expand(-1, 1, *h_all.shape[2:])
            h_last = h_all.gather(1, idx).squeeze(1)
            _, logits, _ = self.latent_exec_step(init.latent, h_last)
            return logits
        return None

    def op_targets(self, batch: Batch):
        """Uniform target over table rows whose input (output) value occurs in I (O)."""
        nv = self.cfg.n_values
        present_in = torch.zeros(*batch.inputs.shape[:2], nv).scatter_(-1, batch.inputs, 1.0)
        present_out = torch.zeros(*batch.outputs.shape[:2], nv).scatter_(-1, batch.outputs, 1.0)
        t_in = present_in[..., self.row_in]
        t_out = present_out[..., self.row_out]
        dtype = self.tok_emb.dtype
        t_in = (t_in / t_in.sum(-1, keepdim=True)).to(dtype)
        t_out = (t_out / t_out.sum(-1, keepdim=True)).to(dtype)
        return t_in, t_out

    def forward_teacher_forced(self, batch: Batch) -> LossReport:
        logits, auxes, init = self.run_teacher_forced(batch)
        zero = logits.new_zeros(())
        prog = cross_entropy(logits, batch.tok_out, mask=batch.mask)

        exec_loss = zero
        exec_logits = self.final_exec_logits(batch, auxes, init)
        if exec_logits is not None:
            exec_loss = cross_entropy(exec_logits, batch.outputs)

        op_loss = zero
        if self.cfg.use_op_predictor:
            t_in, t_out = self.op_targets(batch)
            first = auxes[0]
            op_loss = cross_entropy(first.wi_logits, t_in) + cross_entropy(first.wo_logits, t_out)
        return LossReport(prog, exec_loss, op_loss,
                          extras={"logits": logits, "exec_logits": exec_logits, "auxes": auxes})

    def forward(self, batch: Batch) -> LossReport:
        return self.forward_teacher_forced(batch)


def robustfill_equivalent(cfg: ModelConfig) -> ModelConfig:
    """LaSynth config with executor, op predictor and decode attention all disabled."""
    return replace(cfg, baseline="lasynth", no_executor=True, no_op_predictor=True,
                   no_decode_attention=True)


def build_model(cfg: ModelConfig, dtype=torch.float32) -> LaSynth:
    return LaSynth(cfg).to(dtype)


__all__ = [
    "DecoderState", "LaSynth", "LossReport", "StepAux", "build_model",
    "robustfill_equivalent", "VOCAB",
]
