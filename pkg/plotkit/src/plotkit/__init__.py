"""Line charts from walk-experiment result tables."""

__version__ = "0.1.0"
