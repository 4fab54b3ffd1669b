"""Geodesic integration with dense output, events, transport, Jacobi fields.

The geodesic equation of a conformal chart in first-order form is

    x' = v,   v'^k = -Gamma^k_ij v^i v^j,

integrated with an embedded adaptive RK45 pair.  After every accepted step
the velocity is projected back to unit g-norm; the pre-projection drift is
recorded so callers can audit it (it stays well below 1e-9 at the default
tolerances).

Curve crossings are detected on the dense output of each accepted step:
samples are scanned for sign changes of the event's implicit function, and
the crossing is then localized by a bracketing root solve.  An event only
"arms" once the trajectory is clearly on the positive side, so a trajectory
that starts on a curve (e.g. right after a reflection) does not immediately
re-fire on it.  A dip guard catches near-tangential crossings that enter and
exit between consecutive samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import RK45, solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .exprdsl import ExprDomainError
from .manifold import MetricChart, gauss_curvature, normalize

__all__ = [
    "GeodesicState",
    "JacobiState",
    "EventSpec",
    "Stop",
    "DensePath",
    "IntegrationError",
    "ChartExitError",
    "make_state",
    "geodesic_step",
    "integrate",
    "parallel_transport",
    "jacobi_integrate",
    "two_point_distance",
]

RTOL_DEFAULT = 1e-9
ATOL_DEFAULT = 1e-10

# exceptions the compiled chart functions can raise when leaving the domain
_DOMAIN_ERRORS = (ExprDomainError, ValueError, ZeroDivisionError, OverflowError)


class IntegrationError(RuntimeError):
    """Stepper failure (step-size underflow or step budget exceeded)."""


class ChartExitError(IntegrationError):
    """A single step left the chart domain."""


@dataclass(frozen=True)
class GeodesicState:
    """Point on the unit tangent bundle; time doubles as arc length."""

    position: np.ndarray
    velocity: np.ndarray
    time: float = 0.0


@dataclass(frozen=True)
class JacobiState:
    """Normal component of a Jacobi field in a parallel frame, and its rate."""

    j: float
    j_dot: float


def make_state(chart: MetricChart, position, velocity, time: float = 0.0) -> GeodesicState:
    """Build a state with the velocity normalized to unit g-length."""
    p = np.asarray(position, dtype=float)
    v = normalize(chart, p, np.asarray(velocity, dtype=float))
    return GeodesicState(p, v, float(time))


@dataclass(frozen=True)
class EventSpec:
    """Curve-crossing predicate for :func:`integrate`.

    ``fn(point) -> float`` is the curve's implicit function.  With
    ``direction=-1`` the event fires when the value crosses from positive to
    negative (entering an obstacle whose implicit function is positive
    outside); ``direction=+1`` fires on the opposite crossing (exiting a
    region).  ``threshold`` is the clearance needed to arm the event, and
    ``guard`` (a chart-distance scale, or None) enables a minimization pass
    for dips that stay between samples.
    """

    fn: Callable[[np.ndarray], float]
    direction: int = -1
    threshold: float = 1e-9
    guard: Optional[float] = None


@dataclass(frozen=True)
class Stop:
    """Why integration ended: 'reached-time', 'event-hit', or 'chart-exit'."""

    kind: str
    state: GeodesicState
    event_index: Optional[int] = None

    @property
    def point(self):
        return self.state.position

    @property
    def time(self):
        return self.state.time


class DensePath:
    """Dense-output geodesic trajectory on [t0, t1]; immutable once built."""

    def __init__(self, chart, segments, breakpoints, states, drifts, t1=None):
        self.chart = chart
        self._segments = segments  # list of scipy DenseOutput, ordered
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.states = states  # GeodesicState at each breakpoint
        self.drifts = np.asarray(drifts, dtype=float)
        self.t0 = float(breakpoints[0])
        self.t1 = float(breakpoints[-1] if t1 is None else t1)

    @property
    def max_drift(self) -> float:
        return float(self.drifts.max()) if self.drifts.size else 0.0

    @property
    def start_state(self) -> GeodesicState:
        return self.states[0]

    @property
    def end_state(self) -> GeodesicState:
        return self.states[-1]

    def _raw(self, t: float) -> np.ndarray:
        if not self._segments:
            s = self.states[0]
            return np.concatenate([s.position, s.velocity])
        t = min(max(t, self.t0), self.t1)
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        i = min(max(i, 0), len(self._segments) - 1)
        return np.asarray(self._segments[i](t), dtype=float)

    def __call__(self, t: float):
        u = self._raw(t)
        return u[:2], u[2:]

    def position(self, t: float) -> np.ndarray:
        return self._raw(t)[:2]

    def velocity(self, t: float) -> np.ndarray:
        return self._raw(t)[2:]

    def state(self, t: float) -> GeodesicState:
        p, v = self(t)
        return make_state(self.chart, p, v, t)

    def sample(self, ts) -> np.ndarray:
        """Evaluate at many times; returns array of shape (len(ts), 4)."""
        return np.array([self._raw(t) for t in np.atleast_1d(ts)])


def _geodesic_rhs(chart: MetricChart):
    phi_x, phi_y = chart.phi_x, chart.phi_y

    def rhs(t, u):
        x, y, vx, vy = u
        a = phi_x(x, y)
        b = phi_y(x, y)
        return (
            vx,
            vy,
            -(a * vx * vx + 2.0 * b * vx * vy - a * vy * vy),
            -(-b * vx * vx + 2.0 * a * vx * vy + b * vy * vy),
        )

    return rhs


def _renorm(chart: MetricChart, u: np.ndarray):
    """Project the velocity part of u to unit g-norm; returns (u, drift)."""
    s = math.exp(chart.phi(u[0], u[1]))
    n = s * math.hypot(u[2], u[3])
    drift = abs(n - 1.0)
    out = u.copy()
    out[2:] /= n
    return out, drift


def geodesic_step(chart: MetricChart, s: GeodesicState, h: float) -> GeodesicState:
    """One accepted embedded-RK step of suggested size h (h=0 is the identity).

    The step may be shortened until the local error estimate passes the
    default tolerances; the velocity is renormalized afterwards.
    """
    if h == 0.0:
        return s
    u0 = np.concatenate([s.position, s.velocity])
    try:
        solver = RK45(
            _geodesic_rhs(chart), s.time, u0, t_bound=s.time + 100.0 * h,
            rtol=RTOL_DEFAULT, atol=ATOL_DEFAULT, first_step=h,
        )
        solver.step()
    except _DOMAIN_ERRORS as err:
        raise ChartExitError(f"left the chart domain: {err}") from None
    if solver.status == "failed":
        raise IntegrationError("step-size underflow")
    u, _ = _renorm(chart, solver.y)
    return GeodesicState(u[:2], u[2:], float(solver.t))


def _normalize_events(event) -> list:
    if event is None:
        return []
    if isinstance(event, EventSpec):
        return [event]
    if callable(event):
        return [EventSpec(event)]
    return [e if isinstance(e, EventSpec) else EventSpec(e) for e in event]


_SUBSAMPLES = 9  # dense-output samples per accepted step, endpoints included


def integrate(
    chart: MetricChart,
    s0: GeodesicState,
    t_end: float,
    event: Union[None, Callable, EventSpec, Sequence] = None,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
    max_step: float = np.inf,
    max_steps: int = 1_000_000,
):
    """Integrate to t_end or until an event fires; returns (DensePath, Stop).

    ``event`` may be a bare implicit function, an :class:`EventSpec`, or a
    sequence of those; the earliest crossing wins.  Crossings are localized
    so the implicit-function residual is far below 1e-10.  Leaving the chart
    domain yields a 'chart-exit' stop at the last accepted state.
    """
    rhs = _geodesic_rhs(chart)
    events = _normalize_events(event)
    u0 = np.concatenate([np.asarray(s0.position, float), np.asarray(s0.velocity, float)])
    u0, _ = _renorm(chart, u0)
    t = float(s0.time)
    t_end = float(t_end)

    segments: list = []
    breakpoints = [t]
    states = [GeodesicState(u0[:2], u0[2:], t)]
    drifts: list = []

    def finish(t1=None, stop=None):
        path = DensePath(chart, segments, breakpoints, states, drifts, t1=t1)
        return path, stop

    if t_end <= t:
        return finish(stop=Stop("reached-time", states[0]))

    def signed(ev: EventSpec):
        sgn = 1.0 if ev.direction < 0 else -1.0
        fn = ev.fn
        return lambda p: sgn * fn(p)

    hfns = [signed(ev) for ev in events]
    armed = [hf(u0[:2]) > ev.threshold for hf, ev in zip(hfns, events)]

    u = u0
    h_prev = None
    for _ in range(max_steps):
        try:
            solver = RK45(
                rhs, t, u, t_bound=t_end, rtol=rtol, atol=atol,
                max_step=max_step, first_step=h_prev,
            )
            solver.step()
        except _DOMAIN_ERRORS:
            return finish(stop=Stop("chart-exit", states[-1]))
        if solver.status == "failed":
            # step-size underflow: for smooth conformal factors this happens
            # only where the metric blows up, i.e. at the chart's edge
            return finish(stop=Stop("chart-exit", states[-1]))
        sol = solver.dense_output()
        t_new = float(solver.t)
        h_prev = min(solver.h_abs, max(t_end - t_new, 1e-300)) or None

        hit_t = None
        hit_idx = None
        if events:
            ts = np.linspace(t, t_new, _SUBSAMPLES)
            try:
                ys = sol(ts)  # shape (4, n)
            except _DOMAIN_ERRORS:
                return finish(stop=Stop("chart-exit", states[-1]))
            pts = ys[:2].T
            for i, (hf, ev) in enumerate(zip(hfns, events)):
                hs = np.array([hf(p) for p in pts])
                tc = _scan_event(hf, ev, hs, ts, sol, armed, i)
                if tc is not None and (hit_t is None or tc < hit_t):
                    hit_t, hit_idx = tc, i

        if hit_t is not None:
            uh, drift = _renorm(chart, np.asarray(sol(hit_t), dtype=float))
            drifts.append(drift)
            segments.append(sol)
            breakpoints.append(hit_t)
            end = GeodesicState(uh[:2], uh[2:], float(hit_t))
            states.append(end)
            return finish(t1=hit_t, stop=Stop("event-hit", end, event_index=hit_idx))

        u, drift = _renorm(chart, solver.y)
        drifts.append(drift)
        segments.append(sol)
        t = t_new
        breakpoints.append(t)
        states.append(GeodesicState(u[:2], u[2:], t))
        if t >= t_end:
            return finish(stop=Stop("reached-time", states[-1]))
    raise IntegrationError(f"step budget exceeded ({max_steps} steps)")


def _scan_event(hf, ev: EventSpec, hs, ts, sol, armed, i):
    """Find the first crossing of one event within a step; updates arming."""

    def ht(tau):
        return hf(np.asarray(sol(tau))[:2])

    dipped = None
    for k in range(len(ts) - 1):
        if armed[i]:
            if hs[k] > 0.0 >= hs[k + 1]:
                if hs[k + 1] == 0.0:
                    return float(ts[k + 1])
                return float(brentq(ht, ts[k], ts[k + 1], xtol=1e-13, rtol=8.9e-16))
            if ev.guard is not None and dipped is None and hs[k + 1] < ev.guard:
                dipped = k
        if not armed[i] and hs[k + 1] > ev.threshold:
            armed[i] = True
    if dipped is not None and ev.guard is not None:
        res = minimize_scalar(
            ht, bounds=(float(ts[0]), float(ts[-1])), method="bounded",
            options={"xatol": 1e-12},
        )
        if res.fun < 0.0 and ht(ts[0]) > 0.0:
            return float(brentq(ht, ts[0], res.x, xtol=1e-13, rtol=8.9e-16))
    return None


# ---------------------------------------------------------------------------
# Parallel transport and Jacobi fields along a dense path
# ---------------------------------------------------------------------------


def parallel_transport(chart: MetricChart, base_path: DensePath, v0) -> np.ndarray:
    """Transport v0 from the start of base_path to its end.

    Solves v'^k + Gamma^k_ij x'^i v^j = 0 with the path's dense tangent;
    transport is a g-isometry, which the tests audit rather than enforce.
    """
    phi_x, phi_y = chart.phi_x, chart.phi_y

    def rhs(tau, v):
        p, vel = base_path(tau)
        a = phi_x(p[0], p[1])
        b = phi_y(p[0], p[1])
        # Gamma contractions against the path tangent
        g1 = a * vel[0] * v[0] + b * (vel[1] * v[0] + vel[0] * v[1]) - a * vel[1] * v[1]
        g2 = -b * vel[0] * v[0] + a * (vel[1] * v[0] + vel[0] * v[1]) + b * vel[1] * v[1]
        return (-g1, -g2)

    if base_path.t1 == base_path.t0:
        return np.asarray(v0, dtype=float)
    res = solve_ivp(
        rhs, (base_path.t0, base_path.t1), np.asarray(v0, dtype=float),
        method="RK45", rtol=1e-10, atol=1e-12,
    )
    if not res.success:
        raise IntegrationError(f"transport failed: {res.message}")
    return res.y[:, -1]


def two_point_distance(chart: MetricChart, p, q, rtol: float = RTOL_DEFAULT) -> float:
    """Riemannian distance between p and q by geodesic shooting.

    Solves for the launch angle and flight time that carry p onto q (unique
    on simply connected nonpositively curved charts, which covers the stock
    ones).  The flight time of the unit-speed connecting geodesic is the
    distance.
    """
    from scipy.optimize import root

    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    gap = q - p
    eu = math.hypot(gap[0], gap[1])
    if eu == 0.0:
        return 0.0
    mid = 0.5 * (p + q)
    t_guess = eu * math.exp(chart.phi(mid[0], mid[1]))
    theta0 = math.atan2(gap[1], gap[0])

    def residual(z):
        theta, t_fly = z
        s = make_state(chart, p, (math.cos(theta), math.sin(theta)))
        path, _ = integrate(chart, s, abs(t_fly), rtol=rtol, atol=rtol * 0.1)
        return path.end_state.position - q

    res = root(residual, [theta0, t_guess], method="hybr", tol=1e-12)
    if not res.success and np.linalg.norm(res.fun) > 1e-8:
        raise IntegrationError(f"shooting failed between {p} and {q}: {res.message}")
    return abs(float(res.x[1]))


def jacobi_integrate(
    chart: MetricChart, base: DensePath, j0: JacobiState, t: float
) -> JacobiState:
    """Evolve j'' + K(gamma(t)) j = 0 along the base geodesic up to time t.

    Scalar form of the Jacobi equation: exact for the normal component in a
    parallel orthonormal frame in dimension two.
    """
    if j0.j == 0.0 and j0.j_dot == 0.0:
        return JacobiState(0.0, 0.0)
    if t == base.t0:
        return j0

    def rhs(tau, w):
        p = base.position(tau)
        return (w[1], -gauss_curvature(chart, p) * w[0])

    res = solve_ivp(
        rhs, (base.t0, float(t)), (j0.j, j0.j_dot),
        method="RK45", rtol=1e-10, atol=1e-12,
    )
    if not res.success:
        raise IntegrationError(f"jacobi integration failed: {res.message}")
    return JacobiState(float(res.y[0, -1]), float(res.y[1, -1]))
