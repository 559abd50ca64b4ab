"""Bundled graph data (certified momentum switch)."""
