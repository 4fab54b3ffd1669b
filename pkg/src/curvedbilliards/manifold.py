"""Conformally flat metric charts g = e^{2*phi(x,y)} (dx^2 + dy^2).

A chart is described by the log conformal factor phi given as expression text
(see :mod:`curvedbilliards.exprdsl`).  All geometric quantities below come
from phi and its exact symbolic partials:

* inner product      <v, w>_g = e^{2 phi} (v . w)
* Christoffel symbols of the conformal metric,
* Gauss curvature    K = -e^{-2 phi} (phi_xx + phi_yy).

Two stock charts cover most experiments: ``euclidean()`` (phi = 0) and
``poincare_disk()`` (phi = ln(2/(1 - x^2 - y^2)), K = -1 on the open unit
disk).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exprdsl import Expr, compile_fn, differentiate, parse_expr, to_source

__all__ = [
    "MetricChart",
    "euclidean",
    "poincare_disk",
    "inner",
    "norm",
    "christoffel",
    "gauss_curvature",
    "normalize",
]


@dataclass(frozen=True)
class MetricChart:
    """Conformal chart defined by phi; derivatives are compiled once."""

    source: str
    phi_ast: Expr = field(repr=False)
    phi: Callable = field(repr=False)
    phi_x: Callable = field(repr=False)
    phi_y: Callable = field(repr=False)
    phi_xx: Callable = field(repr=False)
    phi_xy: Callable = field(repr=False)
    phi_yy: Callable = field(repr=False)
    # vectorized copies for grid sampling
    vphi: Callable = field(repr=False)
    vcurv: Callable = field(repr=False)

    @classmethod
    def from_expression(cls, source: str) -> "MetricChart":
        ast = parse_expr(source)
        dx = differentiate(ast, "x")
        dy = differentiate(ast, "y")
        dxx = differentiate(dx, "x")
        dxy = differentiate(dx, "y")
        dyy = differentiate(dy, "y")

        vphi = compile_fn(ast, vectorized=True)
        vdxx = compile_fn(dxx, vectorized=True)
        vdyy = compile_fn(dyy, vectorized=True)

        def vcurv(x, y):
            return -np.exp(-2.0 * vphi(x, y)) * (vdxx(x, y) + vdyy(x, y))

        return cls(
            source=to_source(ast),
            phi_ast=ast,
            phi=compile_fn(ast),
            phi_x=compile_fn(dx),
            phi_y=compile_fn(dy),
            phi_xx=compile_fn(dxx),
            phi_xy=compile_fn(dxy),
            phi_yy=compile_fn(dyy),
            vphi=vphi,
            vcurv=vcurv,
        )

    def scale(self, p) -> float:
        """Conformal scale e^{phi} at p (length of a euclidean unit vector)."""
        return float(np.exp(self.phi(p[0], p[1])))


def euclidean() -> MetricChart:
    return MetricChart.from_expression("0")


def poincare_disk() -> MetricChart:
    """Unit-disk chart of the hyperbolic plane, K = -1."""
    return MetricChart.from_expression("ln(2/(1 - (x^2 + y^2)))")


def inner(chart: MetricChart, p, v, w) -> float:
    """Riemannian inner product <v, w>_g at the point p."""
    s = np.exp(2.0 * chart.phi(p[0], p[1]))
    return float(s * (v[0] * w[0] + v[1] * w[1]))


def norm(chart: MetricChart, p, v) -> float:
    """Riemannian length of the tangent vector v at p."""
    return float(chart.scale(p) * np.hypot(v[0], v[1]))


def christoffel(chart: MetricChart, p) -> np.ndarray:
    """Christoffel symbols Gamma[k, i, j] of the conformal metric at p.

    Symmetric in (i, j); for g = e^{2 phi} delta the nonzero pattern is built
    from the two first partials of phi.
    """
    a = chart.phi_x(p[0], p[1])
    b = chart.phi_y(p[0], p[1])
    return np.array(
        [
            [[a, b], [b, -a]],
            [[-b, a], [a, b]],
        ]
    )


def gauss_curvature(chart: MetricChart, p) -> float:
    """Gauss curvature K(p) = -e^{-2 phi} * laplacian(phi)."""
    x, y = p[0], p[1]
    lap = chart.phi_xx(x, y) + chart.phi_yy(x, y)
    return float(-np.exp(-2.0 * chart.phi(x, y)) * lap)


def normalize(chart: MetricChart, p, v) -> np.ndarray:
    """Rescale v to unit g-length at p.  Raises on the zero vector."""
    n = norm(chart, p, v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero tangent vector")
    return np.asarray(v, dtype=float) / n
