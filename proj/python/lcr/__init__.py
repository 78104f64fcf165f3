"""Python bindings for the lcr core library."""

from ._lcr import (
    DataError,
    answers_equivalent,
    compress,
    describe_config,
    group_rewards,
    normalize_answer,
    pass_at_k,
    pass_at_k_exact,
    train_toy,
)

__all__ = [
    "DataError",
    "answers_equivalent",
    "compress",
    "describe_config",
    "group_rewards",
    "normalize_answer",
    "pass_at_k",
    "pass_at_k_exact",
    "train_toy",
]
