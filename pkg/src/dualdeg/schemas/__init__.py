"""Versioned JSON schemas for problem configs and run reports."""
