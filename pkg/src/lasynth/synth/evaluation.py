"""Correctness checking, evaluation metrics and dataset regeneration."""

from __future__ import annotations

import csv
import json
import multiprocessing
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import torch

from ..datagen.dataset import SCHEMA_VERSION, Dataset
from ..lang import LangError, RuntimeFault, classify_control_flow, interpret, parse
from ..lang.nodes import ControlFlowClass
from .decoding import decode

REPORT_SCHEMA_VERSION = 1


def check_program(tokens, pairs, list_len: int = 5) -> bool:
    """True iff ``tokens`` parse and map every input to its output."""
    try:
        program = parse(list(tokens), list_len=list_len)
        return all(interpret(program, list(i)) == list(o) for i, o in pairs)
    except (LangError, RuntimeFault, RecursionError):
        return False


def select_candidate(candidates, spec, list_len: int = 5):
    """Best spec-satisfying candidate, else the top-ranked one, else None."""
    for cand in candidates:
        if check_program(cand.tokens, spec, list_len):
            return cand, True
    return (candidates[0], False) if candidates else (None, False)


@dataclass
class EpisodeResult:
    id: str
    cls: str
    n_tokens: int
    predicted: list
    logp: float
    spec_ok: bool
    generalizes: bool
    exact: bool


@dataclass
class EvalReport:
    generalization: float
    exact_match: float
    per_class: dict
    class_counts: dict
    per_length: dict         # bucket label -> accuracy
    length_counts: dict
    count: int
    beam_size: int
    results: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("results")
        d["schema_version"] = REPORT_SCHEMA_VERSION
        d["kind"] = "eval"
        return d


def _bucket(n, width):
    b = n // width
    return f"{b * width}-{(b + 1) * width - 1}"


def summarize(results, beam_size, bucket_width: int = 16) -> EvalReport:
    n = len(results)
    gen = sum(r.generalizes for r in results)
    exact = sum(r.exact for r in results)
    class_counts = {c.value: 0 for c in ControlFlowClass}
    class_hits = Counter()
    length_counts, length_hits = Counter(), Counter()
    for r in results:
        class_counts[r.cls] += 1
        class_hits[r.cls] += r.generalizes
        b = _bucket(r.n_tokens, bucket_width)
        length_counts[b] += 1
        length_hits[b] += r.generalizes
    per_class = {c: (class_hits[c] / k if k else 0.0) for c, k in class_counts.items()}
    order = sorted(length_counts, key=lambda s: int(s.split("-")[0]))
    return EvalReport(
        generalization=gen / n if n else 0.0,
        exact_match=exact / n if n else 0.0,
        per_class=per_class,
        class_counts=class_counts,
        per_length={b: length_hits[b] / length_counts[b] for b in order},
        length_counts={b: length_counts[b] for b in order},
        count=n,
        beam_size=beam_size,
        results=list(results),
    )


def evaluate_episode(model, ep, beam_size=64, greedy=False, max_len=None) -> EpisodeResult:
    list_len = model.cfg.list_len
    cands = decode(model, ep.spec, beam_size, max_len, greedy=greedy)
    chosen, spec_ok = select_candidate(cands, ep.spec, list_len)
    predicted = list(chosen.tokens) if chosen else []
    generalizes = spec_ok and check_program(predicted, ep.heldout, list_len)
    return EpisodeResult(
        id=ep.id, cls=ep.cls, n_tokens=ep.n_tokens, predicted=predicted,
        logp=chosen.logp if chosen else float("-inf"), spec_ok=spec_ok,
        generalizes=generalizes, exact=chosen is not None and predicted == list(ep.tokens),
    )


_WORKER_JOB = None


def _run_job(ep):
    fn, model, kwargs = _WORKER_JOB
    return fn(model, ep, **kwargs)


def _worker_init():
    torch.set_num_threads(1)


def map_episodes(fn, model, episodes, workers: int = 1, **kwargs) -> list:
    """``[fn(model, ep, **kwargs) for ep in episodes]``, optionally over forked workers.

    Workers inherit a read-only copy of the model; results come back in input order.
    """
    global _WORKER_JOB
    episodes = list(episodes)
    torch.set_flush_denormal(True)
    if workers <= 1 or len(episodes) < 2:
        return [fn(model, ep, **kwargs) for ep in episodes]
    _WORKER_JOB = (fn, model, kwargs)
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init) as pool:
            return pool.map(_run_job, episodes, chunksize=max(1, len(episodes) // (4 * workers)))
    finally:
        _WORKER_JOB = None


def evaluate(model, dataset, beam_size: int = 64, greedy=False, max_len=None,
             workers: int = 1) -> EvalReport:
    model.eval()
    results = map_episodes(evaluate_episode, model, dataset, workers,
                           beam_size=beam_size, greedy=greedy, max_len=max_len)
    results.sort(key=lambda r: r.id)
    return summarize(results, 1 if greedy else beam_size)


def write_eval_report(report: EvalReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "eval_episodes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "class", "n_tokens", "spec_ok", "generalizes", "exact", "logp", "predicted"])
        for r in report.results:
            w.writerow([r.id, r.cls, r.n_tokens, int(r.spec_ok), int(r.generalizes), int(r.exact),
                        f"{r.logp:.6f}", " ".join(map(str, r.predicted))])
    with open(out / "eval_classes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class", "count", "accuracy"])
        for c, acc in report.per_class.items():
            w.writerow([c, report.class_counts[c], f"{acc:.6f}"])
    with open(out / "eval_lengths.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bucket", "count", "accuracy"])
        for b, acc in report.per_length.items():
            w.writerow([b, report.length_counts[b], f"{acc:.6f}"])
    with open(out / "eval_summary.jsonl", "w") as f:
        f.write(json.dumps(report.summary(), sort_keys=True) + "\n")


# -- regeneration --

@dataclass
class Replacement:
    id: str
    old: list
    new: list


@dataclass
class RegenReport:
    count: int
    replaced: int
    mean_tokens_before: float
    mean_tokens_after: float
    audit_violations: list
    beam_size: int
    replacements: list = field(default_factory=list, repr=False)

    @property
    def replacement_rate(self) -> float:
        return self.replaced / self.count if self.count else 0.0

    def summary(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION, "kind": "regen", "count": self.count,
            "replaced": self.replaced, "replacement_rate": self.replacement_rate,
            "mean_tokens_before": self.mean_tokens_before,
            "mean_tokens_after": self.mean_tokens_after,
            "audit_violations": list(self.audit_violations), "beam_size": self.beam_size,
        }


def audit(episodes, list_len: int = 5) -> list:
    """Ids of episodes whose program fails any of their ten pairs."""
    return [ep.id for ep in episodes if not check_program(ep.tokens, ep.pairs, list_len)]


def _passing_candidates(model, ep, beam_size, max_len, list_len):
    return [c for c in decode(model, ep.spec, beam_size, max_len)
            if check_program(c.tokens, ep.pairs, list_len)]


def regenerate(model, dataset, beam_size: int = 8, select: str = "best", max_len=None,
               workers: int = 1):
    """Replace each program by a verified model prediction; returns (Dataset, RegenReport).

    ``select="best"`` takes the highest-scoring candidate passing all ten pairs,
    ``select="shortest"`` the shortest such candidate.
    """
    if select not in ("best", "shortest"):
        raise ValueError("select must be 'best' or 'shortest'")
    model.eval()
    list_len = model.cfg.list_len
    new_eps, replacements = [], []
    found = map_episodes(_passing_candidates, model, dataset, workers,
                         beam_size=beam_size, max_len=max_len, list_len=list_len)
    for ep, passing in zip(dataset, found):
        if select == "shortest":
            passing.sort(key=lambda c: len(c.tokens))
        if passing and list(passing[0].tokens) != list(ep.tokens):
            new = list(passing[0].tokens)
            cls = classify_control_flow(parse(new, list_len=list_len)).value
            new_eps.append(replace(ep, tokens=new, cls=cls, n_tokens=len(new)))
            replacements.append(Replacement(ep.id, list(ep.tokens), new))
        else:
            new_eps.append(ep)
    replaced_ids = {r.id for r in replacements}
    violations = audit([ep for ep in new_eps if ep.id in replaced_ids], list_len)
    n = len(new_eps)
    report = RegenReport(
        count=n,
        replaced=len(replacements),
        mean_tokens_before=sum(ep.n_tokens for ep in dataset) / n if n else 0.0,
        mean_tokens_after=sum(ep.n_tokens for ep in new_eps) / n if n else 0.0,
        audit_violations=violations,
        beam_size=beam_size,
        replacements=replacements,
    )
    config = dict(dataset.config) if isinstance(dataset, Dataset) else {}
    split = dataset.split if isinstance(dataset, Dataset) else "train"
    iteration = dataset.iteration + 1 if isinstance(dataset, Dataset) else 1
    return Dataset(new_eps, config, split, iteration), report


def write_regen_report(report: RegenReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "regen_replacements.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "old_len", "new_len", "old", "new"])
        for r in report.replacements:
            w.writerow([r.id, len(r.old), len(r.new), " ".join(map(str, r.old)), " ".join(map(str, r.new))])
    with open(out / "regen_summary.jsonl", "w") as f:
        summary = report.summary()
        summary["dataset_schema_version"] = SCHEMA_VERSION
        f.write(json.dumps(summary, sort_keys=True) + "\n")
