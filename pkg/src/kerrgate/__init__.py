"""Spectral simulation of a cross-Kerr controlled-sign gate on two single photons."""

__version__ = "0.1.0"
