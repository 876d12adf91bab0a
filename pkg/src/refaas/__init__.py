"""Serverless function translation with energy accounting."""

__version__ = "0.1.0"
