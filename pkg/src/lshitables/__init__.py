"""Mergeable, differentially private LSH ensembles for outlier detection."""

__version__ = "0.1.0"
