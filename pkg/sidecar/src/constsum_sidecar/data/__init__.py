"""Bundled seed corpus for the masked LM."""
