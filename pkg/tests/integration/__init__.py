"""Integration tests for oneway."""
