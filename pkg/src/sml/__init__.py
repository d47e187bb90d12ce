"""Computational laboratory for mixing masas: circle measures, rank-one maps, group models and bimodule measures."""

__version__ = "0.1.0"
