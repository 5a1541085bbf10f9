"""Test suite for RechnungsChecker."""
