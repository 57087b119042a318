"""CLI interface for nhosc."""
