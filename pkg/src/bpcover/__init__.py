"""Model-based test generation from behavioral programs."""

__version__ = "0.1.0"
