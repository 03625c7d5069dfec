"""Geometric-part and affordance score mapping for zero-shot object-goal navigation."""

__version__ = "0.1.0"
