"""Key-relation prompting and summary evaluation toolkit."""

__version__ = "0.1.0"
