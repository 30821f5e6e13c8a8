"""Two-neighbour bootstrap percolation on [n]^d: exact counts, oracles and simulation."""

from bootperc.lattice import Configuration, Cube, GridShape

__all__ = ["Configuration", "Cube", "GridShape"]
__version__ = "0.1.0"
