"""Error-rate analysis and simulation of cooperative NOMA with an
energy-harvesting decode-and-forward relay."""

__version__ = "0.1.0"
