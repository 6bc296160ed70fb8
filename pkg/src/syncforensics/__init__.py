"""Simulated decentralized file synchronisation and remote evidence recovery."""

__version__ = "0.1.0"
