"""Cross-country constitutional text summarization pipeline and evaluation toolkit."""

__version__ = "0.1.0"
