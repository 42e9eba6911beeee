"""Shared types, distances, storage, configuration and errors."""
