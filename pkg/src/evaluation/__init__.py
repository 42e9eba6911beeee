"""Brute-force oracles and evaluation protocols."""
