"""Gesture Operational Model toolkit for inertial motion-capture recordings."""
from ._accel import backend

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]
