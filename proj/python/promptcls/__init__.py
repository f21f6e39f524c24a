"""Prompt-based paragraph classification: python surface over the C++ core."""

from ._core import (
    DataError,
    LabelScores,
    MaskScorer,
    TrainError,
    UsageError,
    Verbalizer,
    Vocabulary,
    WrappedText,
    bidirectional_kl,
    eda,
    f1_positive,
    fold_of_ids,
    label_ce_loss,
    macro_f1,
    random_delete,
    random_insert,
    random_swap,
    synonym_replace,
    validate_template,
    wrap,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "LabelScores",
    "MaskScorer",
    "TrainError",
    "UsageError",
    "Verbalizer",
    "Vocabulary",
    "WrappedText",
    "bidirectional_kl",
    "eda",
    "f1_positive",
    "fold_of_ids",
    "label_ce_loss",
    "macro_f1",
    "random_delete",
    "random_insert",
    "random_swap",
    "synonym_replace",
    "validate_template",
    "wrap",
]
