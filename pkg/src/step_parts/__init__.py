"""Deterministic STEP B-Rep part extraction, tessellated label carriers and evaluation."""
from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
