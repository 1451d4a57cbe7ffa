from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields


@dataclass(frozen=True)
class SamplerProfile:
    """Shape limits for the grammar-directed program sampler."""

    max_depth: int = 3          # 1 = straight-line; each For/If adds a level
    max_loop_nesting: int = 2
    min_stmts: int = 1
    max_stmts: int = 3
    max_body_stmts: int = 2
    max_ifs_per_body: int = 1
    max_extra_decls: int = 2
    p_for: float = 0.3
    p_if: float = 0.2
    p_else: float = 0.25
    p_scalar_assign: float = 0.05
    p_paren: float = 0.05
    op_count_weights: tuple = (0.55, 0.33, 0.12)


@dataclass(frozen=True)
class GenConfig:
    list_len: int = 5
    value_range: tuple = (-4, 4)
    max_tokens: int = 256
    k_spec: int = 5
    k_test: int = 5
    loop_fraction_target: float = 0.5
    triviality_probe_count: int = 20
    seed: int = 0
    n_train: int = 5000
    n_valid: int = 500
    n_test: int = 500
    max_attempts: int = 20_000   # per episode, before GenerationStalled
    profile: SamplerProfile = field(default_factory=SamplerProfile)

    def __post_init__(self):
        vmin, vmax = self.value_range
        if not vmin < 0 < vmax:
            raise ValueError(f"value_range must straddle zero, got {self.value_range}")
        if self.k_spec < 1 or self.k_test < 1:
            raise ValueError("k_spec and k_test must be >= 1")
        if not 0.0 <= self.loop_fraction_target <= 1.0:
            raise ValueError("loop_fraction_target must lie in [0, 1]")

    @property
    def values(self) -> range:
        return range(self.value_range[0], self.value_range[1] + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value_range"] = list(self.value_range)
        d["profile"]["op_count_weights"] = list(self.profile.op_count_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown GenConfig keys: {sorted(unknown)}")
        prof = dict(d.pop("profile", {}))
        if "op_count_weights" in prof:
            prof["op_count_weights"] = tuple(prof["op_count_weights"])
        if "value_range" in d:
            d["value_range"] = tuple(d["value_range"])
        return cls(profile=SamplerProfile(**prof), **d)


PRESETS = {
    "desk": GenConfig(n_train=5000, n_valid=500, n_test=500),
    "paper": GenConfig(n_train=500_000, n_valid=1000, n_test=1000),
}
