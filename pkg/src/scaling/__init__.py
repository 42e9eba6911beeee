"""Synthetic sources, scaling curves, the artificial tree and law fitting."""
