"""Framework services."""
