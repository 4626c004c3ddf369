"""lace-perc: exact lace-expansion coefficients and Monte Carlo critical points
for bond percolation on hypercubes and tori."""

__version__ = "1.0.0"
