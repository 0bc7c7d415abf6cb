"""Rising-stars pipeline: rank a young-researcher cohort by predicted citation gain."""

__version__ = "0.1.0"
