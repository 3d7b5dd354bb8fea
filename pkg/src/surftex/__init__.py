"""Synthetic height images of sandblasted and face-milled surfaces."""
from .heightfield import HeightField, read_hfld, stats, write_hfld
from .rng import RandomStream

__version__ = "0.1.0"
__all__ = ["HeightField", "RandomStream", "read_hfld", "stats", "write_hfld", "__version__"]
