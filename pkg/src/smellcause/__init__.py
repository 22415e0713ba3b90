"""Screen static-analysis smells for potentially causal links to process metrics."""

__version__ = "0.1.0"
