"""Ternary weights in 2T2R resistive memory read with a single timed sense."""

__version__ = "0.1.0"
