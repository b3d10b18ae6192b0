"""Unit tests for oneway."""
