"""Seedable simulator for cross-modal semantic communication over noisy channels."""

__version__ = "0.1.0"
