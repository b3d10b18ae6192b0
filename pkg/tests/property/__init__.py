"""Property-based tests for oneway."""
