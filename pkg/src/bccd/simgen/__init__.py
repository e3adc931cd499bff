"""Synthetic ground truth, sampling, evaluation metrics and experiments."""
from bccd.simgen.evaluate import (
    CATEGORIES,
    EvalReport,
    causal_accuracy,
    causal_decisions,
    confusion_matrix,
    evaluate,
    pag_accuracy,
    statement_true,
)
from bccd.simgen.experiment import (
    Manifest,
    format_confusion,
    format_manifest,
    format_results,
    parse_manifest,
    read_manifest,
    run_experiment,
    run_trial,
    summarize,
    sweep,
    trial_seed,
)
from bccd.simgen.generate import (
    DiscreteBayesNet,
    GroundTruth,
    conditional_mutual_information,
    dependence_margin,
    drop_columns,
    random_cpts,
    random_faithful_bn,
    random_dag,
    random_ground_truth,
    sample_dataset,
)

__all__ = [
    "CATEGORIES",
    "DiscreteBayesNet",
    "EvalReport",
    "GroundTruth",
    "Manifest",
    "causal_accuracy",
    "causal_decisions",
    "conditional_mutual_information",
    "confusion_matrix",
    "dependence_margin",
    "drop_columns",
    "evaluate",
    "format_confusion",
    "format_manifest",
    "format_results",
    "pag_accuracy",
    "parse_manifest",
    "random_cpts",
    "random_dag",
    "random_faithful_bn",
    "random_ground_truth",
    "read_manifest",
    "run_experiment",
    "run_trial",
    "sample_dataset",
    "statement_true",
    "summarize",
    "sweep",
    "trial_seed",
]
