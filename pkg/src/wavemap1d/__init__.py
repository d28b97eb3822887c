"""Characteristic-lattice solver and estimate auditor for forced wave maps
in 1+1 dimensions into embedded compact targets."""

from __future__ import annotations

__version__ = "0.1.0"
