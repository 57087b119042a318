"""nhosc - exact and numerical dynamics of non-Hermitian time-dependent oscillators."""

__version__ = "0.1.0"
