"""Equivalence checking of reversible and quantum circuits via reversible miters."""
from __future__ import annotations

__version__ = "0.1.0"
