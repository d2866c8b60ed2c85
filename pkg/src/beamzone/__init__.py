"""Influence zones of continuous steel beams under pattern loading."""

__version__ = "0.1.0"
