"""Digital-analog quantum simulation of the Heisenberg model on trapped ions."""

__version__ = "0.1.0"
