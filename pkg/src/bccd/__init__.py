"""Bayesian constraint-based causal discovery on discrete data."""

__version__ = "0.1.0"
