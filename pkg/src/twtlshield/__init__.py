"""Shielded Q-learning under time-window temporal logic constraints."""

__version__ = "0.1.0"
