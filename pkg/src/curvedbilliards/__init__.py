"""Billiard flow in the exterior of convex obstacles on curved 2-D charts."""

__version__ = "0.1.0"

from .manifold import MetricChart, euclidean, poincare_disk  # noqa: F401
