"""Session-based topic suggestion from query logs."""

__version__ = "0.1.0"
