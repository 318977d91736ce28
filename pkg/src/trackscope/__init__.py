"""Third-party tracker extraction and tracking-network analysis."""

__version__ = "0.1.0"
