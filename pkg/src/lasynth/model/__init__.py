from .batch import Batch, make_batch, signature_tensor, spec_tensors, value_index
from .config import ABLATIONS, BASELINES, DESK_MODEL, PAPER_MODEL, ModelConfig
from .lasynth import DecoderState, LaSynth, LossReport, StepAux, build_model, robustfill_equivalent
from .optable import Operation, OpTable, build_op_table
from .propsig import IDENTITY_FEATURE, default_features, property_signature_encode

__all__ = [
    "ABLATIONS", "BASELINES", "Batch", "DESK_MODEL", "DecoderState", "IDENTITY_FEATURE",
    "LaSynth", "LossReport", "ModelConfig", "OpTable", "Operation", "PAPER_MODEL", "StepAux",
    "build_model", "build_op_table", "default_features", "make_batch", "property_signature_encode",
    "robustfill_equivalent", "signature_tensor", "spec_tensors", "value_index",
]
