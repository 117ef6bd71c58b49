"""Evaluation harness for screening-mammography classifiers."""

__version__ = "0.1.0"
