"""Moment dynamics of trapped condensates and their FLRW / Bianchi I cosmology duals."""

__version__ = "0.1.0"
