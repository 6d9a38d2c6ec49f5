"""Pointwise dynamics toolkit."""
