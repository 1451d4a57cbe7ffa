"""Per-element property signatures for the signature-based baseline encoder."""

from __future__ import annotations

from .optable import Operation

IDENTITY_FEATURE = "Input == Output?"


def default_features(value_range) -> list[str]:
    lo, hi = value_range
    return [f"O = {c} {sign} I?" for c in range(lo, hi + 1) for sign in "+-"]


def _feature_op(name: str) -> Operation:
    if name == IDENTITY_FEATURE:
        return Operation("+", 0)
    body = name.removeprefix("O =").removesuffix("?").replace(" ", "")
    # body looks like "2+I" or "-3-I"
    if not body.endswith("I") or len(body) < 3 or body[-2] not in "+-":
        raise ValueError(f"unrecognised property {name!r}")
    return Operation(body[-2], int(body[:-2]))


def property_signature_encode(pair, features) -> dict:
    """For each feature, one boolean per list position: does it hold at that element?"""
    inputs, outputs = pair
    out = {}
    for name in features:
        op = _feature_op(name)
        out[name] = [op.apply(i) == o for i, o in zip(inputs, outputs)]
    return out
