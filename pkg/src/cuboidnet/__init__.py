"""Cuboid detection with a small region-proposal network and vertex regression head."""

__version__ = "0.1.0"
