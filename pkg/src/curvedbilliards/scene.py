"""Scenes: a bounding curve, disjoint convex obstacles, hits and reflections.

Curves are radius-Fourier perturbed circles

    c(u) = center + R(2 pi u) (cos 2 pi u, sin 2 pi u),
    R(t) = r0 + sum_m a_m cos(m t) + b_m sin(m t),

parametrized counterclockwise on u in [0,1).  They are star-shaped about
their center by construction, so simplicity reduces to R > 0 and the outward
normal is the -90 degree rotation of the tangent.  Strict convexity is in
the Riemannian sense: the geodesic curvature against the outward normal must
keep one strict sign (negative, matching the convention that a Euclidean
unit circle scores -1).

The bounding curve is transparent to the dynamics -- crossings are reported
but never reflected -- while obstacle hits feed the specular reflection

    reflected = w - 2 <w, nu>_g nu.

Hits with |<w, nu>_g| at or below the tangency threshold are flagged and the
caller decides (the billiard module continues straight through).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .geodesic import (
    ATOL_DEFAULT,
    RTOL_DEFAULT,
    EventSpec,
    GeodesicState,
    integrate,
    make_state,
    two_point_distance,
)
from .manifold import MetricChart, christoffel, inner, norm, normalize

__all__ = [
    "BoundaryCurve",
    "Scene",
    "HitEvent",
    "SceneValidationError",
    "TangentialHitError",
    "geodesic_curvature",
    "reflect",
    "first_hit",
]

TANGENCY_DEFAULT = 1e-6
CONVEXITY_SAMPLES = 512


class SceneValidationError(ValueError):
    """A curve or scene failed its construction-time checks."""


class TangentialHitError(RuntimeError):
    """reflect() refused a hit flagged as tangential."""


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed star-shaped curve with a truncated radius-Fourier profile."""

    center: np.ndarray
    base_radius: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    convex: bool = True
    outward: int = +1  # which side of the curve the normal points to

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))

    @classmethod
    def circle(cls, center, radius, **kw) -> "BoundaryCurve":
        return cls(np.asarray(center, dtype=float), float(radius), **kw)

    # -- radial profile ------------------------------------------------------

    def radius(self, theta):
        r = np.full_like(np.asarray(theta, dtype=float), self.base_radius)
        for m, a in enumerate(self.cos_coeffs, start=1):
            r = r + a * np.cos(m * np.asarray(theta))
        for m, b in enumerate(self.sin_coeffs, start=1):
            r = r + b * np.sin(m * np.asarray(theta))
        return r

    def _radius_scalar(self, t: float):
        r, dr, ddr = self.base_radius, 0.0, 0.0
        for m, a in enumerate(self.cos_coeffs, start=1):
            c, s = math.cos(m * t), math.sin(m * t)
            r += a * c
            dr += -m * a * s
            ddr += -m * m * a * c
        for m, b in enumerate(self.sin_coeffs, start=1):
            c, s = math.cos(m * t), math.sin(m * t)
            r += b * s
            dr += m * b * c
            ddr += -m * m * b * s
        return r, dr, ddr

    # -- geometry ------------------------------------------------------------

    def point(self, u: float) -> np.ndarray:
        t = 2.0 * math.pi * float(u)
        r, _, _ = self._radius_scalar(t)
        return self.center + r * np.array([math.cos(t), math.sin(t)])

    def derivatives(self, u: float):
        """(c(u), c'(u), c''(u)) with respect to the parameter u."""
        t = 2.0 * math.pi * float(u)
        r, dr, ddr = self._radius_scalar(t)
        er = np.array([math.cos(t), math.sin(t)])
        et = np.array([-math.sin(t), math.cos(t)])
        c = self.center + r * er
        two_pi = 2.0 * math.pi
        cp = two_pi * (dr * er + r * et)
        cpp = two_pi**2 * ((ddr - r) * er + 2.0 * dr * et)
        return c, cp, cpp

    def tangent(self, u: float) -> np.ndarray:
        return self.derivatives(u)[1]

    def implicit(self, p) -> float:
        """Signed radial offset: positive outside, negative inside, 0 on."""
        p = np.asarray(p, dtype=float)
        d = p - self.center
        rho = math.hypot(d[0], d[1])
        t = math.atan2(d[1], d[0])
        r, _, _ = self._radius_scalar(t)
        return rho - r

    def implicit_many(self, pts) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.center
        rho = np.hypot(d[..., 0], d[..., 1])
        return rho - self.radius(np.arctan2(d[..., 1], d[..., 0]))

    def param_of_point(self, p) -> float:
        d = np.asarray(p, dtype=float) - self.center
        return (math.atan2(d[1], d[0]) / (2.0 * math.pi)) % 1.0

    def outward_normal(self, u: float) -> np.ndarray:
        """Euclidean unit normal on the outward side."""
        cp = self.tangent(u)
        n = np.array([cp[1], -cp[0]])  # -90 degree rotation of a CCW tangent
        n /= math.hypot(n[0], n[1])
        return self.outward * n

    def unit_normal(self, chart: MetricChart, u: float) -> np.ndarray:
        """Outward normal with unit g-length."""
        n = self.outward_normal(u)
        p = self.point(u)
        return n * math.exp(-chart.phi(p[0], p[1]))

    @property
    def min_radius(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
        return float(np.min(self.radius(t)))

    @property
    def max_radius(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
        return float(np.max(self.radius(t)))


@dataclass(frozen=True)
class HitEvent:
    """A localized crossing of a scene curve by a unit-speed trajectory."""

    curve: Union[int, str]  # obstacle index or "bounding"
    point: np.ndarray
    u: float
    time: float
    incidence: float  # <velocity, outward unit normal>_g at the hit
    tangential: bool


def geodesic_curvature(scene: "Scene", curve: BoundaryCurve, u: float) -> float:
    """Curvature of the curve against its outward normal, g-covariantly.

    <D_u c', nu>_g / |c'|_g^2 -- parametrization-invariant, negative for
    curves that are strictly convex toward the outward side.
    """
    chart = scene.chart
    c, cp, cpp = curve.derivatives(u)
    speed2 = inner(chart, c, cp, cp)
    if speed2 < 1e-24:
        raise SceneValidationError(f"degenerate parametrization at u={u}")
    gam = christoffel(chart, c)
    cov = cpp + np.einsum("kij,i,j->k", gam, cp, cp)
    nu = curve.unit_normal(chart, u)
    return inner(chart, c, cov, nu) / speed2


def reflect(scene: "Scene", at: HitEvent, omega) -> np.ndarray:
    """Specular reflection of omega at the hit point."""
    if at.tangential:
        raise TangentialHitError(f"tangential hit on {at.curve} at u={at.u:.6f}")
    chart = scene.chart
    curve = scene.curve(at.curve)
    nu = curve.unit_normal(chart, at.u)
    omega = np.asarray(omega, dtype=float)
    return omega - 2.0 * inner(chart, at.point, omega, nu) * nu


class Scene:
    """Immutable after validation; all queries are re-entrant."""

    def __init__(
        self,
        chart: MetricChart,
        bounding: BoundaryCurve,
        obstacles: Sequence[BoundaryCurve] = (),
        tangency: float = TANGENCY_DEFAULT,
        samples: int = CONVEXITY_SAMPLES,
        seed: int = 0,
        rtol: float = RTOL_DEFAULT,
        atol: float = ATOL_DEFAULT,
        validate: bool = True,
    ):
        self.chart = chart
        self.bounding = bounding
        self.obstacles = list(obstacles)
        self.tangency = float(tangency)
        self.samples = int(samples)
        self.seed = int(seed)
        self.rtol = float(rtol)
        self.atol = float(atol)
        self._prepare_stepping()
        if validate:
            self._validate()

    # -- lookup --------------------------------------------------------------

    def curve(self, curve_id: Union[int, str]) -> BoundaryCurve:
        if curve_id == "bounding":
            return self.bounding
        return self.obstacles[int(curve_id)]

    def contains(self, p, margin: float = 0.0) -> bool:
        """Inside the bounding curve and outside every obstacle."""
        if self.bounding.implicit(p) >= -margin:
            return False
        return all(k.implicit(p) > margin for k in self.obstacles)

    # -- stepping parameters --------------------------------------------------

    def _prepare_stepping(self):
        curves = [self.bounding] + self.obstacles
        # fastest euclidean speed of a unit-g trajectory near the scene
        box = self.bounding.max_radius * 1.05
        cx, cy = self.bounding.center
        xs = np.linspace(cx - box, cx + box, 41)
        ys = np.linspace(cy - box, cy + box, 41)
        X, Y = np.meshgrid(xs, ys)
        with np.errstate(all="ignore"):
            phi = np.asarray(self.chart.vphi(X, Y), dtype=float)
        speeds = np.exp(-phi[np.isfinite(phi)])
        self._speed_max = float(speeds.max()) if speeds.size else 1.0
        feature = min(c.min_radius for c in curves)
        # keep dense samples a small fraction of the finest curve feature
        self.max_step = feature / (3.0 * self._speed_max)
        self._guards = [c.min_radius / 8.0 for c in curves]

    # -- validation -----------------------------------------------------------

    def _validate(self):
        rng = np.random.default_rng(self.seed)
        us = (np.arange(self.samples) + rng.uniform(0, 1, self.samples)) / self.samples
        for label, curve in [("bounding", self.bounding)] + [
            (f"obstacle {i}", k) for i, k in enumerate(self.obstacles)
        ]:
            self._validate_curve(label, curve, us)
        pts = [np.array([k.point(u) for u in us]) for k in self.obstacles]
        for i, k in enumerate(self.obstacles):
            inside = self.bounding.implicit_many(pts[i])
            if np.any(inside >= 0.0):
                raise SceneValidationError(f"obstacle {i} is not strictly inside the bounding curve")
            for j in range(i + 1, len(self.obstacles)):
                if np.any(k.implicit_many(pts[j]) <= 0.0) or np.any(
                    self.obstacles[j].implicit_many(pts[i]) <= 0.0
                ):
                    raise SceneValidationError(f"obstacles {i} and {j} are not disjoint")
        self._check_connected()

    def _validate_curve(self, label, curve, us):
        t = 2.0 * np.pi * us
        r = np.asarray(curve.radius(t))
        if np.min(r) <= 0.0:
            raise SceneValidationError(f"{label}: radial profile dips to {np.min(r):.3g}")
        # chart margin: the curve (slightly inflated) must evaluate cleanly
        pts = curve.center + 1.02 * r[:, None] * np.column_stack([np.cos(t), np.sin(t)])
        with np.errstate(all="ignore"):
            phi = np.asarray(self.chart.vphi(pts[:, 0], pts[:, 1]), dtype=float)
        if not np.all(np.isfinite(phi)):
            raise SceneValidationError(f"{label}: curve leaves the chart domain margin")
        if curve.convex:
            kappa = np.array([geodesic_curvature(self, curve, u) for u in us])
            if not (np.all(kappa < 0.0) or np.all(kappa > 0.0)):
                raise SceneValidationError(f"{label}: geodesic curvature changes sign")
            if np.max(np.abs(kappa)) < 1e-12:
                raise SceneValidationError(f"{label}: curvature vanishes (not strictly convex)")

    def _check_connected(self):
        from scipy.ndimage import label as cc_label

        n = 96
        box = self.bounding.max_radius
        cx, cy = self.bounding.center
        xs = np.linspace(cx - box, cx + box, n)
        ys = np.linspace(cy - box, cy + box, n)
        X, Y = np.meshgrid(xs, ys)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        mask = self.bounding.implicit_many(pts) < 0.0
        for k in self.obstacles:
            mask &= k.implicit_many(pts) > 0.0
        grid = mask.reshape(n, n)
        _, ncomp = cc_label(grid)
        if ncomp != 1:
            raise SceneValidationError(
                f"free region splits into {ncomp} components (flood check)"
            )

    # -- obstacle separation ---------------------------------------------------

    @cached_property
    def min_obstacle_separation(self) -> float:
        """Smallest Riemannian distance between two obstacles (inf if < 2)."""
        if len(self.obstacles) < 2:
            return math.inf
        best = math.inf
        for i in range(len(self.obstacles)):
            for j in range(i + 1, len(self.obstacles)):
                best = min(best, self._pair_distance(self.obstacles[i], self.obstacles[j]))
        return best

    def _pair_distance(self, ka: BoundaryCurve, kb: BoundaryCurve) -> float:
        from scipy.optimize import minimize

        us = np.linspace(0.0, 1.0, 64, endpoint=False)
        pa = np.array([ka.point(u) for u in us])
        pb = np.array([kb.point(u) for u in us])
        d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
        i, j = np.unravel_index(np.argmin(d2), d2.shape)

        def cost(z):
            return two_point_distance(
                self.chart, ka.point(z[0]), kb.point(z[1]), rtol=1e-8
            )

        res = minimize(
            cost, [us[i], us[j]], method="Nelder-Mead",
            options={"xatol": 1e-5, "fatol": 1e-9, "maxfev": 120},
        )
        return float(res.fun)

    # -- boundary shooting helpers --------------------------------------------

    def boundary_state(self, u: float, theta: float, time: float = 0.0) -> GeodesicState:
        """Unit phase point on the bounding curve, theta from the inward normal.

        theta is the signed angle (conformal charts preserve angles, so it is
        measured Euclideanly) from the inward normal; |theta| < pi/2 points
        strictly inward.  Positive theta tilts toward decreasing boundary
        parameter, so on a circular chamber a straight chord launched at
        theta exits at the same angle theta.
        """
        p = self.bounding.point(u)
        n_in = -self.bounding.outward_normal(u)
        c, s = math.cos(theta), math.sin(theta)
        w = np.array([c * n_in[0] + s * n_in[1], -s * n_in[0] + c * n_in[1]])
        return make_state(self.chart, p, w, time)

    def exit_angle(self, point, velocity) -> float:
        """Signed angle of an outgoing velocity from the outward normal at ∂S."""
        u = self.bounding.param_of_point(point)
        n_out = self.bounding.outward_normal(u)
        v = np.asarray(velocity, dtype=float)
        return math.atan2(n_out[0] * v[1] - n_out[1] * v[0], n_out[0] * v[0] + n_out[1] * v[1])


def first_hit(scene: Scene, s0: GeodesicState, t_max: float) -> Optional[HitEvent]:
    """Earliest crossing of any scene curve within t_max, or None.

    Obstacle events fire entering from outside; the bounding event fires
    leaving the inside. Crossings are localized to an implicit-function
    residual far below 1e-10.
    """
    hit, _, _ = _first_hit_with_path(scene, s0, t_max)
    return hit


def _first_hit_with_path(scene: Scene, s0: GeodesicState, t_max: float):
    """(HitEvent | None, DensePath, Stop) triple for internal reuse."""
    events = [
        EventSpec(scene.bounding.implicit, direction=+1, guard=None)
    ] + [
        EventSpec(k.implicit, direction=-1, guard=g)
        for k, g in zip(scene.obstacles, scene._guards[1:])
    ]
    path, stop = integrate(
        scene.chart, s0, s0.time + t_max, event=events,
        rtol=scene.rtol, atol=scene.atol, max_step=scene.max_step,
    )
    if stop.kind != "event-hit":
        return None, path, stop
    if stop.event_index == 0:
        curve_id: Union[int, str] = "bounding"
    else:
        curve_id = stop.event_index - 1
    curve = scene.curve(curve_id)
    p = stop.state.position
    u = curve.param_of_point(p)
    incidence = inner(scene.chart, p, stop.state.velocity, curve.unit_normal(scene.chart, u))
    hit = HitEvent(
        curve=curve_id,
        point=p,
        u=u,
        time=stop.state.time,
        incidence=incidence,
        tangential=abs(incidence) <= scene.tangency,
    )
    return hit, path, stop
