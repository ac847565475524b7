"""Topological analysis of sonar echo collections."""

from .core import DomainDescriptor, DomainError, PointCloud, SignalMap, grid_points, magnitude_channel

__version__ = "0.1.0"

__all__ = [
    "DomainDescriptor",
    "DomainError",
    "PointCloud",
    "SignalMap",
    "grid_points",
    "magnitude_channel",
    "__version__",
]
