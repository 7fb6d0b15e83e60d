"""Single-atom quantum jump photodetector toolkit."""

__version__ = "0.1.0"
