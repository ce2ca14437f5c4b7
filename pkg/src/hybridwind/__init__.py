"""Sensitivity engine for hyperfine-mediated axion-wind searches."""

__version__ = "0.1.0"
