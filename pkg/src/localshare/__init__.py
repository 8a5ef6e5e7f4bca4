"""Directional O&D local-share time series and time-series clustering."""

__version__ = "0.1.0"
