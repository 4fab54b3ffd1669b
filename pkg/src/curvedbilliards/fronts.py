"""Convex fronts: curves with a unit normal field riding the geodesic flow.

A front is a sampled curve y(u) with unit g-normals omega(u); propagation
moves every sample along its normal geodesic, so the parameter grid rides
with the flow.  Convexity is monitored by two scalars per sample:

* ``f``      -- normalized: <D_u y', omega>_g / |y'|_g^2, the geodesic
  curvature of the front against its normal field (circle of radius r in
  the plane: -1/r; hyperbolic circle of radius rho: -coth rho),
* ``f_raw``  -- unnormalized: <D_u y', omega>_g in the front's own grid.

Both are negative exactly when the front is strictly convex toward omega.
The normalized value is the one quoted in reports; the raw value is the
one that decreases strictly under propagation on nonpositively curved
charts (the normalized value of an expanding hyperbolic circle climbs from
-coth rho toward -1, while the raw value keeps falling with the stretching
grid), so monotonicity checks use ``f_raw`` on the shared grid.

Fronts built from a boundary sub-curve launch along unit tangents with
flight times lam - s (s = arc length along the sub-curve), which in the
plane is the classical involute construction; those fronts are orthogonal
to their normal field by construction and the residual is audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .geodesic import EventSpec, integrate, make_state
from .manifold import MetricChart, christoffel, inner, normalize
from .scene import (
    BoundaryCurve,
    HitEvent,
    Scene,
    TangentialHitError,
    _first_hit_with_path,
    reflect,
)

__all__ = [
    "Front",
    "FrontError",
    "build_orthogonal_front",
    "front_convexity",
    "front_convexity_raw",
    "propagate_front",
    "reflect_front",
    "orthogonal_hits",
    "front_alignment",
    "orthogonality_residual",
    "classify_hits",
    "split_by_hit",
]

FRONT_SAMPLES_DEFAULT = 256
REFLECT_EPS_DEFAULT = 1e-3


class FrontError(RuntimeError):
    """Front construction or processing failed (collision, mixed hits...)."""


@dataclass(frozen=True)
class Front:
    """Sampled front; immutable. u-grid must be uniformly spaced."""

    us: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    f: np.ndarray
    f_raw: np.ndarray
    closed: bool
    provenance: str

    @property
    def n_samples(self) -> int:
        return len(self.us)

    @property
    def strictly_convex(self) -> bool:
        return bool(np.all(self.f < 0.0))

    @classmethod
    def from_samples(
        cls,
        scene: Scene,
        points,
        normals,
        closed: bool,
        provenance: str = "constructed",
        us=None,
    ) -> "Front":
        points = np.asarray(points, dtype=float)
        n = len(points)
        if n < 5:
            raise FrontError("need at least 5 samples for the convexity stencil")
        if us is None:
            us = np.arange(n) / n if closed else np.linspace(0.0, 1.0, n)
        us = np.asarray(us, dtype=float)
        gaps = np.diff(us)
        if not np.allclose(gaps, gaps[0], rtol=1e-9, atol=1e-12):
            raise FrontError("sample grid must be uniform")
        normals = np.array(
            [normalize(scene.chart, p, w) for p, w in zip(points, np.asarray(normals, float))]
        )
        f_raw, f = _convexity_arrays(scene.chart, us, points, normals, closed)
        return cls(us, points, normals, f, f_raw, closed, provenance)


def _derivative_stencils(vals: np.ndarray, h: float, closed: bool):
    """(first, second) derivative arrays along axis 0, O(h^2) everywhere."""
    if closed:
        up = np.roll(vals, -1, axis=0)
        dn = np.roll(vals, 1, axis=0)
        d1 = (up - dn) / (2.0 * h)
        d2 = (up - 2.0 * vals + dn) / h**2
        return d1, d2
    d1 = np.empty_like(vals)
    d2 = np.empty_like(vals)
    d1[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * h)
    d2[1:-1] = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h**2
    d1[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    d1[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * h)
    d2[0] = (2.0 * vals[0] - 5.0 * vals[1] + 4.0 * vals[2] - vals[3]) / h**2
    d2[-1] = (2.0 * vals[-1] - 5.0 * vals[-2] + 4.0 * vals[-3] - vals[-4]) / h**2
    return d1, d2


def _convexity_arrays(chart: MetricChart, us, points, normals, closed):
    h = us[1] - us[0]
    d1, d2 = _derivative_stencils(points, h, closed)
    f_raw = np.empty(len(points))
    speed2 = np.empty(len(points))
    for i, (p, yp, ypp, w) in enumerate(zip(points, d1, d2, normals)):
        gam = christoffel(chart, p)
        cov = ypp + np.einsum("kij,i,j->k", gam, yp, yp)
        f_raw[i] = inner(chart, p, cov, w)
        speed2[i] = inner(chart, p, yp, yp)
    return f_raw, f_raw / speed2


def orthogonality_residual(scene: Scene, front: Front) -> np.ndarray:
    """Per-sample <d_u y, omega>_g by the same stencil as the convexity."""
    h = front.us[1] - front.us[0]
    d1, _ = _derivative_stencils(front.points, h, front.closed)
    out = np.empty(front.n_samples)
    for i, (p, yp, w) in enumerate(zip(front.points, d1, front.normals)):
        out[i] = inner(scene.chart, p, yp, w)
    return out


# ---------------------------------------------------------------------------
# construction from a boundary sub-curve
# ---------------------------------------------------------------------------


def build_orthogonal_front(
    scene: Scene,
    curve: BoundaryCurve,
    span: Tuple[float, float],
    lam: float,
    n_samples: int = FRONT_SAMPLES_DEFAULT,
) -> Front:
    """Launch unit tangents from the sub-curve; sample i flies lam - s_i.

    s is g-arc length along the sub-curve from span[0].  In the plane this
    traces the involute of the curve.  The result is orthogonal to its
    normal field; strict convexity and containment in the free region are
    verified and failures raise FrontError (lam too large or too small).
    """
    chart = scene.chart
    u0, u1 = span
    if not u1 > u0:
        raise ValueError("span must be increasing")
    # arc-length table over the sub-curve
    m = max(8 * n_samples, 512)
    uu = np.linspace(u0, u1, m)
    sp = np.empty(m)
    for k, u in enumerate(uu):
        c, cp, _ = curve.derivatives(u)
        sp[k] = math.sqrt(inner(chart, c, cp, cp))
    s_grid = np.concatenate([[0.0], np.cumsum((sp[1:] + sp[:-1]) * 0.5 * np.diff(uu))])
    total = s_grid[-1]
    if lam <= total:
        raise FrontError(
            f"lam={lam:g} does not clear the sub-curve arc length {total:g}"
        )
    s_samples = np.linspace(0.0, total, n_samples)
    u_of_s = np.interp(s_samples, s_grid, uu)

    pts = np.empty((n_samples, 2))
    nrm = np.empty((n_samples, 2))
    for i, u in enumerate(u_of_s):
        c, cp, _ = curve.derivatives(u)
        state = make_state(chart, c, cp)
        path, stop = integrate(
            chart, state, lam - s_samples[i], rtol=scene.rtol, atol=scene.atol
        )
        if stop.kind != "reached-time":
            raise FrontError(f"sample {i} left the chart during construction")
        pts[i] = path.end_state.position
        nrm[i] = path.end_state.velocity
        if not scene.contains(pts[i]):
            raise FrontError(f"lam={lam:g} pushes sample {i} out of the free region")
    front = Front.from_samples(scene, pts, nrm, closed=False,
                               provenance="constructed", us=s_samples)
    if not front.strictly_convex:
        raise FrontError(f"constructed front is not strictly convex (lam={lam:g})")
    return front


# ---------------------------------------------------------------------------
# convexity queries
# ---------------------------------------------------------------------------


def front_convexity(scene: Scene, front: Front, idx: int) -> float:
    """Normalized convexity scalar at sample idx (negative = convex)."""
    if front.n_samples < 5:
        raise FrontError("need at least 5 samples")
    return float(front.f[int(idx)])


def front_convexity_raw(scene: Scene, front: Front, idx: int) -> float:
    """Unnormalized convexity at sample idx, in the front's own grid."""
    if front.n_samples < 5:
        raise FrontError("need at least 5 samples")
    return float(front.f_raw[int(idx)])


# ---------------------------------------------------------------------------
# propagation and reflection
# ---------------------------------------------------------------------------


def _obstacle_events(scene: Scene):
    return [
        EventSpec(k.implicit, direction=-1, guard=g)
        for k, g in zip(scene.obstacles, scene._guards[1:])
    ]


def propagate_front(scene: Scene, front: Front, t: float) -> Front:
    """Advance every sample by the normal geodesic flow for time t."""
    if t == 0.0:
        return front
    events = _obstacle_events(scene)
    pts = np.empty_like(front.points)
    nrm = np.empty_like(front.normals)
    for i, (p, w) in enumerate(zip(front.points, front.normals)):
        state = make_state(scene.chart, p, w)
        path, stop = integrate(
            scene.chart, state, t, event=events,
            rtol=scene.rtol, atol=scene.atol, max_step=scene.max_step,
        )
        if stop.kind == "event-hit":
            raise FrontError(
                f"sample {i} hits obstacle {stop.event_index} at t={stop.time:.6g}; "
                "split the front and reflect"
            )
        if stop.kind != "reached-time":
            raise FrontError(f"sample {i} left the chart at t={stop.time:.6g}")
        pts[i] = path.end_state.position
        nrm[i] = path.end_state.velocity
    return Front.from_samples(
        scene, pts, nrm, front.closed, provenance=f"propagated(t={t:g})", us=front.us
    )


def classify_hits(scene: Scene, front: Front, max_time: float = 200.0):
    """Per-sample (curve id | None, tangential flag) for the normal rays."""
    out = []
    for p, w in zip(front.points, front.normals):
        hit = _sample_hit(scene, p, w, max_time)
        out.append((None, False) if hit is None else (hit.curve, hit.tangential))
    return out


def _sample_hit(scene: Scene, p, w, max_time) -> Optional[HitEvent]:
    state = make_state(scene.chart, p, w)
    hit, _, _ = _first_hit_with_path(scene, state, max_time)
    return hit


def split_by_hit(scene: Scene, front: Front, max_time: float = 200.0):
    """Cut the front into maximal runs with a common hit classification.

    Returns a list of (sub-front, curve id | None); runs shorter than the
    5-sample stencil are dropped.  Tangential samples separate runs but do
    not join any.
    """
    labels = classify_hits(scene, front, max_time)
    pieces = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i < len(labels) and labels[i] == labels[start]:
            continue
        curve_id, tangential = labels[start]
        if i - start >= 5 and not tangential:
            sub = Front(
                front.us[start:i],
                front.points[start:i],
                front.normals[start:i],
                front.f[start:i],
                front.f_raw[start:i],
                closed=False,
                provenance=front.provenance,
            )
            pieces.append((sub, curve_id))
        start = i
    return pieces


def reflect_front(
    scene: Scene,
    front: Front,
    eps: float = REFLECT_EPS_DEFAULT,
    max_time: float = 200.0,
) -> Front:
    """Carry each sample through its obstacle hit to a common phase.

    Every sample flies to its own hit time, reflects, and then continues so
    that all samples share the total time eps past the last hit.  The equal
    phase keeps the result an orthogonal section of the reflected ray
    family; a fixed per-sample step after reflection would instead trace an
    offset of the obstacle and lose both orthogonality and the mirror law.

    All samples must hit the same obstacle transversally; otherwise split
    first (FrontError names the offending sample).
    """
    chart = scene.chart
    reflected = []
    target = None
    for i, (p, w) in enumerate(zip(front.points, front.normals)):
        state = make_state(chart, p, w)
        hit, path, stop = _first_hit_with_path(scene, state, max_time)
        if hit is None:
            raise FrontError(f"sample {i} hits nothing within t={max_time:g}")
        if hit.curve == "bounding":
            raise FrontError(f"sample {i} reaches the bounding curve before any obstacle")
        if hit.tangential:
            raise TangentialHitError(f"sample {i} grazes obstacle {hit.curve}")
        if target is None:
            target = hit.curve
        elif hit.curve != target:
            raise FrontError(
                f"mixed hits: sample {i} reaches obstacle {hit.curve}, others {target}"
            )
        w_ref = reflect(scene, hit, stop.state.velocity)
        reflected.append((hit.time, make_state(chart, hit.point, w_ref, time=0.0)))

    t_end = max(t for t, _ in reflected) + eps
    pts = np.empty_like(front.points)
    nrm = np.empty_like(front.normals)
    for i, (t_hit, out_state) in enumerate(reflected):
        path2, stop2 = integrate(
            chart, out_state, t_end - t_hit, rtol=scene.rtol, atol=scene.atol
        )
        if stop2.kind != "reached-time":
            raise FrontError(f"sample {i} left the chart after its reflection")
        pts[i] = path2.end_state.position
        nrm[i] = path2.end_state.velocity
    return Front.from_samples(
        scene, pts, nrm, front.closed, provenance="reflected", us=front.us
    )


# ---------------------------------------------------------------------------
# orthogonal arrivals on a target front
# ---------------------------------------------------------------------------


class _RadialTarget:
    """Star-shaped interpolation of a closed front about its centroid."""

    def __init__(self, chart: MetricChart, front: Front):
        if not front.closed:
            raise FrontError("target front must be closed")
        self.chart = chart
        self.center = front.points.mean(axis=0)
        d = front.points - self.center
        theta = np.arctan2(d[:, 1], d[:, 0])
        order = np.argsort(theta)
        self.theta = theta[order]
        self.radius = np.hypot(d[order, 0], d[order, 1])
        ang = np.arctan2(front.normals[order, 1], front.normals[order, 0])
        # the offset from the radial direction is genuinely periodic in
        # theta, so it interpolates cleanly across the seam
        off = (ang - self.theta + np.pi) % (2.0 * np.pi) - np.pi
        self.normal_offset = np.unwrap(off)

    def implicit(self, p):
        d = np.asarray(p, dtype=float) - self.center
        th = math.atan2(d[1], d[0])
        return math.hypot(d[0], d[1]) - float(np.interp(
            th, self.theta, self.radius, period=2 * np.pi
        ))

    def normal_at(self, p):
        d = np.asarray(p, dtype=float) - self.center
        th = math.atan2(d[1], d[0])
        a = th + float(np.interp(th, self.theta, self.normal_offset, period=2 * np.pi))
        n = np.array([math.cos(a), math.sin(a)])
        return n * math.exp(-self.chart.phi(p[0], p[1]))


def front_alignment(
    scene: Scene,
    x_front: Front,
    y_front: Front,
    max_time: float = 200.0,
    max_reflections: int = 100,
) -> np.ndarray:
    """Signed arrival angle of each X-normal geodesic against Y's normal.

    Zero means the ray arrives along Y's normal field (an orthogonal hit).
    NaN marks rays that never reach Y within the caps.
    """
    target = _RadialTarget(scene.chart, y_front)
    sgn = np.sign([target.implicit(p) for p in x_front.points]).sum()
    direction = +1 if sgn <= 0 else -1  # leave from inside, or enter from outside
    y_event = EventSpec(target.implicit, direction=direction,
                        guard=float(np.min(target.radius)) / 8.0)
    obstacle_events = _obstacle_events(scene)
    out = np.full(x_front.n_samples, np.nan)
    for i, (p, w) in enumerate(zip(x_front.points, x_front.normals)):
        state = make_state(scene.chart, p, w)
        deadline = max_time
        for _ in range(max_reflections + 1):
            path, stop = integrate(
                scene.chart, state, state.time + deadline,
                event=[y_event] + obstacle_events,
                rtol=scene.rtol, atol=scene.atol, max_step=scene.max_step,
            )
            if stop.kind != "event-hit":
                break
            deadline -= stop.time - state.time
            if stop.event_index == 0:
                v = stop.state.velocity
                n = target.normal_at(stop.state.position)
                ang_v = math.atan2(v[1], v[0])
                ang_n = math.atan2(n[1], n[0])
                out[i] = (ang_v - ang_n + math.pi) % (2.0 * math.pi) - math.pi
                break
            k = stop.event_index - 1
            curve = scene.obstacles[k]
            u = curve.param_of_point(stop.state.position)
            inc = inner(scene.chart, stop.state.position, stop.state.velocity,
                        curve.unit_normal(scene.chart, u))
            hit = HitEvent(k, stop.state.position, u, stop.state.time, inc,
                           abs(inc) <= scene.tangency)
            if hit.tangential:
                raise TangentialHitError(f"ray {i} grazes obstacle {k}")
            w_ref = reflect(scene, hit, stop.state.velocity)
            state = make_state(scene.chart, hit.point, w_ref, time=stop.state.time)
        # else: reflection cap exhausted, leave NaN
    return out


def orthogonal_hits(
    scene: Scene,
    x_front: Front,
    y_front: Front,
    tol: float = 1e-4,
    max_time: float = 200.0,
    max_reflections: int = 100,
) -> List[int]:
    """Sample indices whose normal ray arrives orthogonally on y_front.

    Orthogonality means the arrival direction matches Y's normal field with
    cosine at least 1 - tol.
    """
    ang = front_alignment(scene, x_front, y_front, max_time, max_reflections)
    with np.errstate(invalid="ignore"):
        good = np.cos(ang) >= 1.0 - tol
    return [int(i) for i in np.flatnonzero(good & ~np.isnan(ang))]
