"""Trend-scored training-instance selection for NER under temporal drift."""

__version__ = "0.1.0"
