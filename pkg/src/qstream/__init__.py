"""Partition, cache, compress and stream Clifford+T circuits as graph-state chunks."""

__version__ = "0.1.0"
