"""Episode generation, line-JSON dataset files and distribution statistics."""

from __future__ import annotations

import csv
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path

from ..lang.interp import RuntimeFault
from ..lang.nodes import ControlFlowClass, classify_control_flow
from ..lang.printer import to_token_ids
from ..lang.vocab import VOCAB
from .config import GenConfig
from .sampler import LoopMode, has_for, is_degenerate, sample_candidate, sample_io

SCHEMA_VERSION = 1
SPLITS = ("train", "valid", "test")


class GenerationStalled(RuntimeError):
    pass


class SchemaMismatch(ValueError):
    def __init__(self, message, line=None, version=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
        self.version = version


@dataclass
class Episode:
    id: str
    tokens: list
    spec: list          # [(input, output)] shown to the synthesizer
    heldout: list       # [(input, output)] used only for judging
    cls: str
    n_tokens: int

    @property
    def pairs(self):
        return list(self.spec) + list(self.heldout)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "spec": [[list(i), list(o)] for i, o in self.spec],
            "heldout": [[list(i), list(o)] for i, o in self.heldout],
            "class": self.cls,
            "n_tokens": self.n_tokens,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Episode":
        return cls(
            id=rec["id"],
            tokens=list(rec["tokens"]),
            spec=[(list(i), list(o)) for i, o in rec["spec"]],
            heldout=[(list(i), list(o)) for i, o in rec["heldout"]],
            cls=rec["class"],
            n_tokens=rec["n_tokens"],
        )


@dataclass
class Dataset:
    episodes: list
    config: dict = field(default_factory=dict)
    split: str = ""
    iteration: int = 0

    def __len__(self):
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    def __getitem__(self, i):
        return self.episodes[i]


def make_episode(ep_id, program, spec, heldout) -> Episode:
    tokens = to_token_ids(program)
    return Episode(
        id=ep_id,
        tokens=tokens,
        spec=spec,
        heldout=heldout,
        cls=classify_control_flow(program).value,
        n_tokens=len(tokens),
    )


def _loop_quota(cfg: GenConfig, split: str, n: int) -> list[bool]:
    n_loop = round(cfg.loop_fraction_target * n)
    quota = [True] * n_loop + [False] * (n - n_loop)
    random.Random(f"{cfg.seed}/{split}/quota").shuffle(quota)
    return quota


def generate_episode(cfg: GenConfig, split: str, index: int, needs_loop: bool) -> Episode:
    """Rejection-sample one episode from its own seeded stream."""
    rng = random.Random(f"{cfg.seed}/{split}/{index}")
    mode = LoopMode.REQUIRED if needs_loop else LoopMode.FORBIDDEN
    for _ in range(cfg.max_attempts):
        prog = sample_candidate(rng, cfg, mode)
        if has_for(prog) != needs_loop:
            continue
        io = sample_io(prog, rng, cfg)
        if io is None:
            continue
        try:
            if is_degenerate(prog, rng, cfg):
                continue
        except RuntimeFault:
            continue
        return make_episode(f"{split}-{index:07d}", prog, *io)
    raise GenerationStalled(
        f"{split}[{index}]: no acceptable program after {cfg.max_attempts} attempts"
    )


def _work(args):
    return generate_episode(*args)


def generate_split(cfg: GenConfig, split: str, n: int, workers: int = 1) -> list[Episode]:
    jobs = [(cfg, split, i, need) for i, need in enumerate(_loop_quota(cfg, split, n))]
    if workers <= 1:
        return [_work(j) for j in jobs]
    with Pool(workers) as pool:
        return list(pool.imap(_work, jobs, chunksize=64))


def generate_dataset(cfg: GenConfig, workers: int = 1) -> dict:
    sizes = {"train": cfg.n_train, "valid": cfg.n_valid, "test": cfg.n_test}
    return {
        split: Dataset(generate_split(cfg, split, sizes[split], workers), cfg.to_dict(), split)
        for split in SPLITS
    }


# -- files --

def write_dataset(path, episodes, config=None, split="", iteration=0) -> None:
    if isinstance(episodes, Dataset):
        config = episodes.config if config is None else config
        split = split or episodes.split
        episodes = episodes.episodes
    header = {
        "schema_version": SCHEMA_VERSION,
        "config": config or {},
        "split": split,
        "iteration": iteration,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for ep in episodes:
            f.write(json.dumps(ep.to_record(), sort_keys=True) + "\n")


_RECORD_KEYS = {"id", "tokens", "spec", "heldout", "class", "n_tokens"}


def read_dataset(path) -> Dataset:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise SchemaMismatch("missing header record", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise SchemaMismatch(f"bad header: {e}", line=1) from None
    version = header.get("schema_version") if isinstance(header, dict) else None
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema_version {version!r}", line=1, version=version)
    episodes = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaMismatch(f"corrupted record: {e.msg}", line=n) from None
        if not isinstance(rec, dict) or set(rec) != _RECORD_KEYS:
            raise SchemaMismatch("record fields do not match schema", line=n)
        episodes.append(Episode.from_record(rec))
    return Dataset(episodes, header.get("config", {}), header.get("split", ""),
                   header.get("iteration", 0))


# -- statistics --

@dataclass
class DatasetStats:
    class_fractions: dict
    length_histogram: list   # [(bucket_label, count)]
    count: int
    mean_tokens: float
    loop_fraction: float


def compute_stats(episodes, bucket_width: int = 16) -> DatasetStats:
    episodes = list(episodes)
    n = len(episodes)
    classes = Counter(ep.cls for ep in episodes)
    fractions = {c.value: (classes[c.value] / n if n else 0.0) for c in ControlFlowClass}
    buckets = Counter(ep.n_tokens // bucket_width for ep in episodes)
    hist = []
    if buckets:
        for b in range(max(buckets) + 1):
            hist.append((f"{b * bucket_width}-{(b + 1) * bucket_width - 1}", buckets[b]))
    looped = sum(_has_for_tokens(ep) for ep in episodes)
    return DatasetStats(
        class_fractions=fractions,
        length_histogram=hist,
        count=n,
        mean_tokens=sum(ep.n_tokens for ep in episodes) / n if n else 0.0,
        loop_fraction=looped / n if n else 0.0,
    )


def _has_for_tokens(ep) -> bool:
    return VOCAB.id("for") in ep.tokens


def write_stats_csv(stats: DatasetStats, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bucket", "count"])
        for label, count in stats.length_histogram:
            w.writerow([label, count])


def write_class_csv(stats: DatasetStats, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class", "fraction"])
        for cls, frac in stats.class_fractions.items():
            w.writerow([cls, f"{frac:.6f}"])
