"""Precomputed table of integer add/subtract operations over the value range."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Operation:
    sign: str   # "+" means O = C + I, "-" means O = C - I
    const: int

    def apply(self, i: int) -> int:
        return self.const + i if self.sign == "+" else self.const - i

    def __str__(self):
        return f"O={self.const}{self.sign}I"


@dataclass(frozen=True)
class OpTable:
    values: tuple          # the value range, ascending
    ops: tuple             # Operation per op id
    rows: tuple            # (op_id, input, output)

    def __len__(self):
        return len(self.rows)

    @property
    def row_ops(self):
        return [r[0] for r in self.rows]

    @property
    def row_inputs(self):
        return [r[1] for r in self.rows]

    @property
    def row_outputs(self):
        return [r[2] for r in self.rows]


def build_op_table(value_range) -> OpTable:
    lo, hi = value_range
    values = tuple(range(lo, hi + 1))
    ops = []
    rows = []
    for c in values:
        for sign in "+-":
            op = Operation(sign, c)
            op_id = len(ops)
            ops.append(op)
            for i in values:
                o = op.apply(i)
                if lo <= o <= hi:
                    rows.append((op_id, i, o))
    return OpTable(values, tuple(ops), tuple(rows))
