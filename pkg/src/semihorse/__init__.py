"""Symbolic semi-horseshoes, pruning and Bohr-chaotic witnesses for subshifts."""

__version__ = "0.1.0"
