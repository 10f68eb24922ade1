"""Sequence models translating frame embeddings into action symbols."""

from .attention import AttentionTagger
from .gradcheck import finite_difference_error, grad_check
from .lstm import LstmParams, lstm_backward, lstm_forward, lstm_init, lstm_step
from .seq2seq import Seq2SeqTranslator
from .training import window_count

MODEL_KINDS = {"seq2seq": Seq2SeqTranslator, "attn_lstm": AttentionTagger}


def load_model(path):
    """Load either model kind from a checkpoint file."""
    import json
    from pathlib import Path

    kind = json.loads(Path(path).read_text()).get("kind")
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown checkpoint kind {kind!r} in {path}")
    return MODEL_KINDS[kind].load(path)


__all__ = [
    "AttentionTagger",
    "Seq2SeqTranslator",
    "LstmParams",
    "lstm_backward",
    "lstm_forward",
    "lstm_init",
    "lstm_step",
    "finite_difference_error",
    "grad_check",
    "window_count",
    "MODEL_KINDS",
    "load_model",
]
