"""Pseudo-spectral lab for the rescaled BBM_eps and KdV equations."""

__version__ = "0.1.0"
