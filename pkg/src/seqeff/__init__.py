"""Sequential effect systems with delimited control."""

__version__ = "0.1.0"
