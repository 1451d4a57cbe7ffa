"""Fixed token vocabulary for the restricted C dialect."""

from __future__ import annotations

PAD, BOS, EOS = "<pad>", "<bos>", "<eos>"
SPECIALS = (PAD, BOS, EOS)

KEYWORDS = ("int", "for", "if", "else", "break", "continue", "return")
SCALAR_NAMES = tuple(f"p_{i}" for i in range(4)) + tuple(f"l_{i}" for i in range(32))
IDENTIFIERS = ("a",) + SCALAR_NAMES
VALUE_MIN, VALUE_MAX = -4, 4
LITERALS = tuple(str(v) for v in range(VALUE_MIN, VALUE_MAX + 1))
PUNCTUATION = (
    "(", ")", "{", "}", "[", "]", ";", ",",
    "=", "==", "!=", "<", ">", "<=", ">=",
    "+", "-", "++", "--", "*",
)

# Fixed preamble; never part of a token sequence.
HEADER = ("int", "*", "func_1", "(", "int", "a", "[", "]", ")")
HEADER_TEXT = "int * func_1(int a[])"


class Vocab:
    """Bijective token-string <-> id mapping."""

    def __init__(self, tokens):
        self.itos = list(tokens)
        self.stoi = {s: i for i, s in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi[token]

    def token(self, idx: int) -> str:
        return self.itos[idx]

    def encode(self, tokens) -> list[int]:
        return [self.stoi[t] for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.itos[i] for i in ids]

    @property
    def pad_id(self):
        return self.stoi[PAD]

    @property
    def bos_id(self):
        return self.stoi[BOS]

    @property
    def eos_id(self):
        return self.stoi[EOS]


VOCAB = Vocab(SPECIALS + KEYWORDS + IDENTIFIERS + LITERALS + PUNCTUATION)
