"""Confidence-gated selective prediction harness for video question answering."""

__version__ = "0.1.0"
