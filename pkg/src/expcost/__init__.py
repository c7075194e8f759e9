"""Expected-cost workbench for the RandML probabilistic language."""

__version__ = "0.1.0"
