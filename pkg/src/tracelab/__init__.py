"""tracelab: config-driven programming-process data collection pipeline."""

__version__ = "0.1.0"
