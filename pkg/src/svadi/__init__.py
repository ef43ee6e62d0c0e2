"""High-order compact ADI pricing for stochastic-volatility models."""

__version__ = "0.1.0"
