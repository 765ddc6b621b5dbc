"""Offline figure generation for imidyn CSV bundles.

This package never recomputes dynamics: it renders what the simulation
CLI wrote (trajectory CSVs, the share-curve table, and the manifest
describing them).
"""
from .figures import FigureSpec, PlotError, read_trajectory, read_share_curve, render

__all__ = ["FigureSpec", "PlotError", "read_trajectory", "read_share_curve", "render"]

__version__ = "0.1.0"
