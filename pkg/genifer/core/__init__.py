"""Core utilities shared by all services."""
