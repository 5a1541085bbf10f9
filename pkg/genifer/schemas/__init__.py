"""Pydantic schemas for configuration and records."""
