"""Codes in the real Grassmannian under the chordal metric."""

__version__ = "0.1.0"
