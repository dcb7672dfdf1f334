"""Subcircuit volumetric benchmarking for compiled quantum circuits."""
__version__ = "0.1.0"
