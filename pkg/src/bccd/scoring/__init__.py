"""Counting, BD scores, structure priors and posteriors for discrete data."""
from bccd.scoring.bd import (
    K2,
    CountTable,
    DirichletPrior,
    FamilyScoreCache,
    batch_log_bd,
    count_table,
    family_score,
    log_bd_score,
)
from bccd.scoring.data import Dataset, format_csv, format_schema, parse_csv, parse_schema, read_csv, write_csv
from bccd.scoring.posterior import StructurePosterior, independence_probability, structure_posterior
from bccd.scoring.priors import (
    StructurePrior,
    implied_probability,
    structure_prior_multilevel,
    structure_prior_uniform,
)

__all__ = [
    "K2",
    "CountTable",
    "Dataset",
    "DirichletPrior",
    "FamilyScoreCache",
    "StructurePosterior",
    "StructurePrior",
    "batch_log_bd",
    "count_table",
    "family_score",
    "format_csv",
    "format_schema",
    "implied_probability",
    "independence_probability",
    "log_bd_score",
    "parse_csv",
    "parse_schema",
    "read_csv",
    "structure_posterior",
    "structure_prior_multilevel",
    "structure_prior_uniform",
    "write_csv",
]
