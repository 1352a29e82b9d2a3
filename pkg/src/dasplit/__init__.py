"""Derived-from-Anosov maps of the 2-torus with non-integrable dominated splittings."""

__version__ = "0.1.0"
