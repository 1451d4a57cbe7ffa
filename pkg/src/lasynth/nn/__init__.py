"""Tensor ops, recurrent cells, attention and optimization (torch autograd backend)."""

from .checkpoint import CheckpointMismatch, config_hash, load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .ops import (
    BiLSTM, BilinearAttention, EmptyKeySet, LSTMCell, ShapeMismatch, StackedLSTM, add,
    attention, attention_many, bilstm_encode, bilstm_reference, concat, cross_entropy, default_dtype,
    embedding_lookup, lstm_gates, lstm_step, matmul, maxpool_over_set, sigmoid, softmax, tanh, uniform_,
)
from .optim import Adam, NonFiniteGradient
