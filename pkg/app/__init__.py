"""AMP Power Allocation - Main Application Package."""

__version__ = "0.1.0"
__author__ = "Sarobidy Sitraka"
__description__ = "AMP.P reconstruction and column power allocation for non-uniformly sparse signals"
