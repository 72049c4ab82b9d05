"""Embedded persistent engine for property domain graphs with a DGQL front end."""

__version__ = "0.1.0"
