"""Network scale-up estimators, two-group SBM analytics and Monte Carlo tools."""

__version__ = "0.1.0"
