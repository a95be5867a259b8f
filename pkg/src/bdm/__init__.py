"""Boundary index computations for Boutet de Monvel type operators on the
half-line and the cylinder."""

__version__ = "0.1.0"
SCHEMA_VERSION = "1.0"
