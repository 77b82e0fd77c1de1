"""Invariance audits for counterfactuals of structural models under normalization."""

__version__ = "0.1.0"
