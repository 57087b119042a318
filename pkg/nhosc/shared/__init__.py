"""Shared configuration, exceptions and models."""
