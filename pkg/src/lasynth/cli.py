"""Command-line entry points: lasynth {gen-data,train,eval,regen,retrain,stats,op-table,grad-check}."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import torch

from . import __version__
from .datagen import (
    PRESETS, GenConfig, compute_stats, generate_dataset, read_dataset,
    write_class_csv, write_dataset, write_stats_csv,
)
from .datagen.dataset import SCHEMA_VERSION
from .diagnostics import run_grad_checks
from .model import ABLATIONS, DESK_MODEL, PAPER_MODEL, ModelConfig, build_model, build_op_table
from .nn import default_dtype, load_checkpoint, save_checkpoint
from .nn.checkpoint import CHECKPOINT_VERSION, config_hash
from .synth import (
    REPORT_SCHEMA_VERSION, TrainConfig, evaluate, regenerate, retrain_loop, train_model,
    write_eval_report, write_loss_csv, write_regen_report,
)

BASELINE_FLAGS = {"lasynth": "lasynth", "robustfill": "robustfill", "propsig": "property_signatures"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_beam: int = 8
    regen_beam: int = 8
    iterations: int = 1
    seed: int = 0
    preset: str = "desk"

    def to_dict(self):
        return {
            "gen": self.gen.to_dict(), "model": self.model.to_dict(), "train": self.train.to_dict(),
            "eval_beam": self.eval_beam, "regen_beam": self.regen_beam,
            "iterations": self.iterations, "seed": self.seed, "preset": self.preset,
        }


RUN_PRESETS = {
    "desk": RunConfig(
        gen=PRESETS["desk"], model=DESK_MODEL,
        train=TrainConfig(steps=3000, batch_size=16, lr=7e-3, decay=0.6, decay_every=750),
        eval_beam=8, regen_beam=8, preset="desk",
    ),
    "paper": RunConfig(
        gen=PRESETS["paper"], model=PAPER_MODEL,
        train=TrainConfig(steps=200_000, batch_size=8, lr=1e-3, decay=0.9, decay_every=6000,
                          clip_norm=5.0),
        eval_beam=64, regen_beam=8, preset="paper",
    ),
}


def _merge(base: dict, override: dict, where: str) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def resolve_config(args) -> RunConfig:
    """Preset, then config file, then command-line flags."""
    preset = getattr(args, "preset", None) or "desk"
    if preset not in RUN_PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    d = RUN_PRESETS[preset].to_dict()
    if getattr(args, "config", None):
        try:
            d = _merge(d, json.loads(Path(args.config).read_text()), "")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from e
    try:
        cfg = RunConfig(
            gen=GenConfig.from_dict(d["gen"]), model=ModelConfig.from_dict(d["model"]),
            train=TrainConfig.from_dict(d["train"]), eval_beam=d["eval_beam"],
            regen_beam=d["regen_beam"], iterations=d["iterations"], seed=d["seed"],
            preset=d["preset"],
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed, gen=replace(cfg.gen, seed=args.seed),
                      model=replace(cfg.model, seed=args.seed),
                      train=replace(cfg.train, seed=args.seed))
    if getattr(args, "beam", None) is not None:
        cfg = replace(cfg, eval_beam=args.beam, regen_beam=args.beam)
    if getattr(args, "iterations", None) is not None:
        cfg = replace(cfg, iterations=args.iterations)
    if getattr(args, "steps", None) is not None:
        cfg = replace(cfg, train=replace(cfg.train, steps=args.steps))
    model = cfg.model
    if getattr(args, "baseline", None):
        model = replace(model, baseline=BASELINE_FLAGS[args.baseline])
    if getattr(args, "ablation", None):
        model = model.with_ablation(args.ablation)
    return replace(cfg, model=model)


# -- provenance --

def git_hash(path) -> str:
    """Git blob hash of a file, or of the sorted file list of a directory."""
    path = Path(path)
    if path.is_dir():
        h = hashlib.sha1()
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(f"{p.relative_to(path)} {git_hash(p)}\n".encode())
        return h.hexdigest()
    data = path.read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_run_record(out: Path, command: str, cfg: RunConfig, inputs=()) -> None:
    out.mkdir(parents=True, exist_ok=True)
    record = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "precision": os.environ.get("LASYNTH_PRECISION", "f32"),
        "inputs": {str(p): git_hash(p) for p in inputs},
        "schema_versions": {
            "dataset": SCHEMA_VERSION, "report": REPORT_SCHEMA_VERSION,
            "checkpoint": CHECKPOINT_VERSION,
        },
    }
    (out / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _dataset_file(path, split) -> Path:
    path = Path(path)
    return path / f"{split}.jsonl" if path.is_dir() else path


def _load_model(path):
    blob = load_checkpoint(path)
    cfg = ModelConfig.from_dict(blob["config"]["model"])
    model = build_model(cfg, default_dtype())
    model.load_state_dict(blob["params"])
    model.eval()
    return model, blob


# -- commands --

def cmd_gen_data(args, cfg: RunConfig, out: Path):
    data = generate_dataset(cfg.gen, workers=args.workers)
    for split, ds in data.items():
        write_dataset(out / f"{split}.jsonl", ds.episodes, cfg.gen.to_dict(), split, 0)
    write_run_record(out, "gen-data", cfg)
    return {split: len(ds) for split, ds in data.items()}


def cmd_train(args, cfg: RunConfig, out: Path):
    src = _dataset_file(_require(args, "dataset"), "train")
    ds = read_dataset(src)
    torch.manual_seed(cfg.seed)
    model = build_model(cfg.model, default_dtype())
    rows = train_model(model, ds.episodes, cfg.train,
                       log=lambda r: print(json.dumps(r), file=sys.stderr))
    write_loss_csv(rows, out / "losses.csv")
    save_checkpoint(out / "checkpoint.pt", model, cfg.to_dict(),
                    extra={"dataset_hash": git_hash(src)})
    (out / "model_card.txt").write_text(
        f"model_config: {json.dumps(cfg.model.to_dict(), sort_keys=True)}\n"
        f"train_config: {json.dumps(cfg.train.to_dict(), sort_keys=True)}\n"
        f"dataset: {src}\n"
        f"dataset_hash: {git_hash(src)}\n"
        f"config_hash: {config_hash(cfg.to_dict())}\n"
    )
    write_run_record(out, "train", cfg, [src])
    return {"steps": cfg.train.steps, "final_loss": rows[-1]["total"] if rows else None}


def cmd_eval(args, cfg: RunConfig, out: Path):
    src = _dataset_file(_require(args, "dataset"), "test")
    ckpt = _require(args, "checkpoint")
    model, _ = _load_model(ckpt)
    report = evaluate(model, read_dataset(src), cfg.eval_beam, greedy=args.greedy,
                      workers=args.workers)
    write_eval_report(report, out)
    write_run_record(out, "eval", cfg, [src, ckpt])
    return report.summary()


def cmd_regen(args, cfg: RunConfig, out: Path):
    src = _dataset_file(_require(args, "dataset"), "train")
    ckpt = _require(args, "checkpoint")
    model, _ = _load_model(ckpt)
    ds = read_dataset(src)
    new, report = regenerate(model, ds, cfg.regen_beam, workers=args.workers)
    write_dataset(out / f"{ds.split or 'train'}.jsonl", new.episodes, new.config, new.split,
                  new.iteration)
    write_regen_report(report, out)
    write_run_record(out, "regen", cfg, [src, ckpt])
    return report.summary()


def cmd_retrain(args, cfg: RunConfig, out: Path):
    root = Path(_require(args, "dataset"))
    train_src, test_src = _dataset_file(root, "train"), _dataset_file(root, "test")
    models, reports, final = retrain_loop(
        read_dataset(train_src), read_dataset(test_src), cfg.model, cfg.train,
        iterations=cfg.iterations, regen_beam=cfg.regen_beam, eval_beam=cfg.eval_beam,
        dtype=default_dtype(), log=lambda r: print(json.dumps(r), file=sys.stderr),
        workers=args.workers,
    )
    summary = []
    for model, rep in zip(models, reports):
        it_dir = out / f"iter{rep.iteration}"
        write_eval_report(rep.eval_report, it_dir)
        write_stats_csv(rep.train_stats, it_dir / "train_lengths.csv")
        if rep.losses:
            write_loss_csv(rep.losses, it_dir / "losses.csv")
        if rep.regen_report:
            write_regen_report(rep.regen_report, it_dir)
        save_checkpoint(it_dir / "checkpoint.pt", model, cfg.to_dict())
        summary.append({"iteration": rep.iteration,
                        "generalization": rep.eval_report.generalization,
                        "mean_tokens": rep.train_stats.mean_tokens})
    write_dataset(out / "train.jsonl", final.episodes, final.config, final.split, final.iteration)
    write_run_record(out, "retrain", cfg, [train_src, test_src])
    return {"iterations": summary}


def cmd_stats(args, cfg: RunConfig, out: Path):
    src = _dataset_file(_require(args, "dataset"), "train")
    stats = compute_stats(read_dataset(src).episodes)
    write_stats_csv(stats, out / "lengths.csv")
    write_class_csv(stats, out / "classes.csv")
    write_run_record(out, "stats", cfg, [src])
    return {"count": stats.count, "mean_tokens": stats.mean_tokens,
            "loop_fraction": stats.loop_fraction, "classes": stats.class_fractions}


def cmd_op_table(args, cfg: RunConfig, out: Path):
    table = build_op_table(cfg.gen.value_range)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "op_table.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row", "op_id", "op", "input", "output"])
        for i, (op_id, inp, outp) in enumerate(table.rows):
            w.writerow([i, op_id, str(table.ops[op_id]), inp, outp])
    write_run_record(out, "op-table", cfg)
    return {"rows": len(table)}


def cmd_grad_check(args, cfg: RunConfig, out: Path):
    results = run_grad_checks(seed=cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "grad_check.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["target", "max_rel_error", "passed"])
        for name, err in results.items():
            w.writerow([name, f"{err:.3e}", int(err <= args.tolerance)])
    write_run_record(out, "grad-check", cfg)
    failed = [k for k, v in results.items() if not v <= args.tolerance]
    if failed:
        raise GradCheckFailed(f"gradient check failed for {failed}")
    return {"checked": len(results), "max_rel_error": max(results.values())}


class GradCheckFailed(RuntimeError):
    pass


def _require(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise ConfigError(f"--{name} is required for this command")
    return value


COMMANDS = {
    "gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval, "regen": cmd_regen,
    "retrain": cmd_retrain, "stats": cmd_stats, "op-table": cmd_op_table,
    "grad-check": cmd_grad_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lasynth", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file overriding preset values")
        p.add_argument("--preset", choices=sorted(RUN_PRESETS), default="desk")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--dataset")
        p.add_argument("--checkpoint")
        p.add_argument("--beam", type=int)
        p.add_argument("--iterations", type=int)
        p.add_argument("--steps", type=int, help="override the number of training updates")
        p.add_argument("--ablation", choices=ABLATIONS)
        p.add_argument("--baseline", choices=sorted(BASELINE_FLAGS))
        p.add_argument("--workers", type=int, default=1)
        if name == "eval":
            p.add_argument("--greedy", action="store_true", help="decode with argmax instead of beam")
        if name == "grad-check":
            p.add_argument("--tolerance", type=float, default=1e-4)
    return parser


def _error_record(exc, command) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "status": "error",
        "command": command,
        "error": type(exc).__name__,
        "message": str(exc),
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](args, cfg, out)
    except Exception as exc:  # every failure becomes a machine-readable record
        record = _error_record(exc, args.command)
        if os.environ.get("LASYNTH_DEBUG"):
            traceback.print_exc()
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(record, sort_keys=True) + "\n")
        except OSError:
            pass
        return 2 if isinstance(exc, (ConfigError, FileNotFoundError)) else 1
    print(json.dumps({"status": "ok", "command": args.command, "result": result},
                     sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
