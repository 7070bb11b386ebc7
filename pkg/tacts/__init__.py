"""Transformation-cost time series (TACTS) spectra and recurrence analysis."""

__version__ = "1.0.0"
