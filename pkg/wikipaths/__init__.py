"""Path extrapolation on article navigation graphs."""

__version__ = "0.4.0"
