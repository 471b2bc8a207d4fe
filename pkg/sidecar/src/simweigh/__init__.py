"""Similarity-based edit weighting over chunk-dump files."""

__version__ = "0.1.0"
