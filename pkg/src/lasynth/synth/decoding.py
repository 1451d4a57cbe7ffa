"""Beam search and greedy decoding over the program vocabulary."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..lang.vocab import VOCAB
from ..model.batch import spec_tensors

# Tokens that may never be emitted by the decoder.
_BANNED = (VOCAB.pad_id, VOCAB.bos_id)


@dataclass(frozen=True)
class Candidate:
    tokens: tuple   # program ids, EOS excluded
    logp: float

    @property
    def key(self):
        return (-self.logp, self.tokens)


def _initial_state(model, pairs):
    dtype = model.tok_emb.dtype
    ins, outs, sigs = spec_tensors(pairs, model.cfg.value_range, dtype)
    return model.init_state(ins.unsqueeze(0), outs.unsqueeze(0), sigs.unsqueeze(0))


def _step_logprobs(model, state, prev):
    state, logits, _ = model.decoder_step(state, torch.tensor(prev, dtype=torch.long))
    logp = torch.log_softmax(logits.double(), dim=-1)
    logp[:, list(_BANNED)] = float("-inf")
    return state, logp


@torch.no_grad()
def greedy_decode(model, pairs, max_len: int | None = None) -> list[Candidate]:
    """Argmax decoding; ties go to the smaller token id."""
    max_len = max_len or model.cfg.max_decode_len
    state = _initial_state(model, pairs)
    tokens, total, prev = [], 0.0, VOCAB.bos_id
    for _ in range(max_len):
        state, logp = _step_logprobs(model, state, [prev])
        tok = int(torch.argmax(logp[0]))
        total += float(logp[0, tok])
        if tok == VOCAB.eos_id:
            return [Candidate(tuple(tokens), total)]
        tokens.append(tok)
        prev = tok
    return []


@torch.no_grad()
def beam_search(model, pairs, beam_size: int = 8, max_len: int | None = None) -> list[Candidate]:
    """Length-synchronised beam search; returns finished candidates best first.

    Each step expands every live hypothesis by every token and keeps the best
    ``beam_size - len(finished)`` expansions ordered by (-log p, token sequence).
    Expansions ending in EOS retire to the result pool. ``max_len`` bounds the
    number of decode steps, EOS included.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    max_len = max_len or model.cfg.max_decode_len
    state = _initial_state(model, pairs)
    live = [((), 0.0)]
    prev = [VOCAB.bos_id]
    finished: list[Candidate] = []
    for _ in range(max_len):
        state, logp = _step_logprobs(model, state, prev)
        scores = torch.tensor([s for _, s in live], dtype=torch.float64).unsqueeze(1) + logp
        room = beam_size - len(finished)
        # Keep everything tied with the cut so ties are resolved lexicographically below.
        flat = scores.flatten()
        k = min(flat.numel(), room)
        cut = torch.topk(flat, k).values[-1]
        idx = torch.nonzero(flat >= cut).flatten().tolist()
        vocab = logp.shape[1]
        expansions = []
        for j in idx:
            i, tok = divmod(j, vocab)
            score = float(flat[j])
            if score == float("-inf"):
                continue
            expansions.append((-score, live[i][0] + (tok,), i))
        expansions.sort(key=lambda e: (e[0], e[1]))
        next_live, parents = [], []
        for neg, seq, i in expansions[:room]:
            if seq[-1] == VOCAB.eos_id:
                finished.append(Candidate(seq[:-1], -neg))
            else:
                next_live.append((seq, -neg))
                parents.append(i)
        if not next_live or len(finished) >= beam_size:
            break
        state = model.reorder(state, parents)
        live = next_live
        prev = [seq[-1] for seq, _ in live]
    finished.sort(key=lambda c: c.key)
    return finished[:beam_size]


def decode(model, pairs, beam_size: int = 8, max_len: int | None = None, greedy=False):
    if greedy:
        return greedy_decode(model, pairs, max_len)
    return beam_search(model, pairs, beam_size, max_len)
