"""Error probabilities and exponents of random point-process codes in R^n."""

__version__ = "0.1.0"
