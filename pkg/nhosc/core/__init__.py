"""Core numerics for nhosc."""
