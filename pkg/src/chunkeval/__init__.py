"""Chunk-based evaluation for grammatical error correction systems."""

__version__ = "0.1.0"
