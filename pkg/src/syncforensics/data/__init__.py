"""Bundled scenario and fixture files."""
