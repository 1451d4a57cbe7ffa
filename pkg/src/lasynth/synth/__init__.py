"""Decoding, correctness checking, evaluation and iterative retraining."""

from .decoding import Candidate, beam_search, decode, greedy_decode
from .evaluation import (
    REPORT_SCHEMA_VERSION, EpisodeResult, EvalReport, RegenReport, Replacement, audit,
    check_program, evaluate, evaluate_episode, map_episodes, regenerate, select_candidate, summarize,
    write_eval_report, write_regen_report,
)
from .training import (
    IterationReport, TrainConfig, batch_schedule, retrain_loop, train_model, write_loss_csv,
)

__all__ = [
    "Candidate", "beam_search", "decode", "greedy_decode", "REPORT_SCHEMA_VERSION",
    "EpisodeResult", "EvalReport", "RegenReport", "Replacement", "audit", "check_program",
    "evaluate", "evaluate_episode", "map_episodes", "regenerate", "select_candidate", "summarize",
    "write_eval_report", "write_regen_report", "IterationReport", "TrainConfig",
    "batch_schedule", "retrain_loop", "train_model", "write_loss_csv",
]
