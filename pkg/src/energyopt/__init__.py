"""Multi-vector energy modelling and optimisation toolkit."""

__version__ = "0.1.0"
