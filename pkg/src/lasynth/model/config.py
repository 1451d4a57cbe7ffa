from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..lang.vocab import VOCAB

BASELINES = ("lasynth", "robustfill", "property_signatures")
ABLATIONS = ("none", "no-executor", "no-partial-executor", "no-op-predictor", "no-decode-attention")


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 64
    embed: int = 64
    layers: int = 1
    k_spec: int = 5
    list_len: int = 5
    vocab_size: int = len(VOCAB)
    value_range: tuple = (-4, 4)
    max_decode_len: int = 256
    no_executor: bool = False
    no_partial_executor: bool = False
    no_op_predictor: bool = False
    no_decode_attention: bool = False
    baseline: str = "lasynth"
    init_scale: float = 0.08
    op_eps: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.baseline not in BASELINES:
            raise ValueError(f"baseline must be one of {BASELINES}, got {self.baseline!r}")
        if self.hidden < 1 or self.embed < 1 or self.layers < 1:
            raise ValueError("hidden, embed and layers must be positive")

    # Effective switches after applying the baseline mode.
    @property
    def use_executor(self) -> bool:
        return not (self.no_executor or self.no_partial_executor or self.baseline != "lasynth")

    @property
    def final_executor_only(self) -> bool:
        return self.no_partial_executor and not self.no_executor and self.baseline == "lasynth"

    @property
    def any_executor(self) -> bool:
        return self.use_executor or self.final_executor_only

    @property
    def use_op_predictor(self) -> bool:
        return not self.no_op_predictor and self.baseline == "lasynth"

    @property
    def use_decode_attention(self) -> bool:
        return not self.no_decode_attention and self.baseline == "lasynth"

    @property
    def n_values(self) -> int:
        return self.value_range[1] - self.value_range[0] + 1

    def with_ablation(self, name: str) -> "ModelConfig":
        if name not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {name!r}")
        if name == "none":
            return self
        return replace(self, **{name.replace("-", "_"): True})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value_range"] = list(self.value_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown ModelConfig keys: {sorted(unknown)}")
        d = dict(d)
        if "value_range" in d:
            d["value_range"] = tuple(d["value_range"])
        return cls(**d)


PAPER_MODEL = ModelConfig(hidden=512, embed=1024, layers=2)
DESK_MODEL = ModelConfig(hidden=64, embed=64, layers=1)
