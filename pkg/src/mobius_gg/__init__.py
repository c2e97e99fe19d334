"""Braids, isotopies and Gambaudo-Ghys quasimorphisms on the Mobius band."""

__version__ = "0.1.0"
