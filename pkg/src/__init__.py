"""Rabi Semiclassical Lab - quantum and semiclassical Rabi model representations and limits"""

__version__ = "0.1.0"
