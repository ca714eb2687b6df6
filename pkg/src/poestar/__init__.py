"""Path order for ETIME on constructor rewrite systems."""

__version__ = "0.1.0"
