"""Freight-truck emissions inventory and pollution damage accounting."""

__version__ = "0.1.0"
