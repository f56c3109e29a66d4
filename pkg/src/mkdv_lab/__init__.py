"""Pseudo-spectral mKdV simulator and asymptotics verification harness."""

__version__ = "0.1.0"
