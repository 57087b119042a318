"""Unit tests for shared modules."""
