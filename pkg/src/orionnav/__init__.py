"""Language-driven navigation stack in a deterministic 2D simulated world."""

__version__ = "0.1.0"
