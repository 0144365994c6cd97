"""Cover-time laboratory for graph walks with and without memory."""

__version__ = "0.1.0"
