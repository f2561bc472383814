"""Validating kernel and session service for expert inquiry dialogues."""

__version__ = "0.1.0"
