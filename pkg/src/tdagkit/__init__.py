"""Extraction, canonical labeling and clustering of unknown-output transaction DAGs."""

from __future__ import annotations

__version__ = "0.1.0"
