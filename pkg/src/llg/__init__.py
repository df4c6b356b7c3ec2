"""Horizontal complexes of local Lie groups: symbolic construction and exact cohomology."""

__version__ = "0.1.0"
