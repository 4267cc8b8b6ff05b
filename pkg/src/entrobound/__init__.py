"""Entropic L_p lower bounds for sequential prediction and noisy recursions."""

__version__ = "0.1.0"
