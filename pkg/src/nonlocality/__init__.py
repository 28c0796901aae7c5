"""Partial-transpose separability test, exact CHSH maxima, and postselected
collective tests on Werner pairs."""

__version__ = "0.1.0"
