"""spectraldp: coherence-adaptive differentially private spectral estimation
with edge-DP graph privatization and DP Max-Cut / 2-CSP solvers."""

__version__ = "0.1.0"
