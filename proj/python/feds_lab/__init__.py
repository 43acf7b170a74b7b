"""Filtered learned edit-distance post-tuning of a toy sequence recognizer.

Configs are plain dicts with the same sections as the JSON config files
(``seed``, ``data``, ``recognizer``, ``train``); missing keys take defaults.
"""

import json as _json

from ._core import (
    Alphabet,
    ConfigError,
    FedsError,
    IoError,
    Recognizer,
    Surrogate,
    decode_greedy,
    edit_distance,
    encode_one_hot,
    evaluate,
    evaluate_set,
    filter_value,
    gate_open,
    read_log,
    relative_ted_improvement,
    scatter,
)
from . import _core

__all__ = [
    "Alphabet", "ConfigError", "FedsError", "IoError", "Recognizer", "Surrogate",
    "config", "decode_greedy", "edit_distance", "encode_one_hot", "evaluate", "evaluate_set",
    "filter_value", "gate_open", "gen_data", "read_log", "relative_ted_improvement",
    "sample_corpus", "scatter", "train_baseline", "tune",
]


def _dump(cfg):
    return _json.dumps(cfg or {})


def config(cfg=None):
    """Return the fully populated, validated config for ``cfg``."""
    return _json.loads(_core.normalize_config(_dump(cfg)))


def sample_corpus(cfg=None):
    return _core.sample_corpus(_dump(cfg))


def gen_data(cfg, out_dir):
    _core.gen_data(_dump(cfg), str(out_dir))


def train_baseline(cfg, data_dir, out_dir):
    return _core.train_baseline(_dump(cfg), str(data_dir), str(out_dir))


def tune(cfg, data_dir, init_checkpoint, out_dir):
    _core.tune(_dump(cfg), str(data_dir), str(init_checkpoint), str(out_dir))
