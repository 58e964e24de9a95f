"""Data package for bundled sample datasets."""
