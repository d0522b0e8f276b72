"""Markovian diffusion with and without recoil: closed forms, spectral and Monte Carlo engines."""

__version__ = "0.1.0"
