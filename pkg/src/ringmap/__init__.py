"""Compile gate-level quantum circuits onto a storage-ring ion computer."""

__version__ = "0.1.0"
