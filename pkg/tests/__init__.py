"""Test suite for nhosc."""
