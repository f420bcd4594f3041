"""Redlist-aware blockchain consensus library and network simulator."""

__version__ = "0.1.0"
