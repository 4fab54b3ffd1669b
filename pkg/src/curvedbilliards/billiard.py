"""Integrate-reflect loops: the generalised geodesic flow on a scene.

Free flight is geodesic; obstacle hits reflect specularly; crossings of the
bounding curve are recorded but never reflected -- the trajectory continues
on the far side as a pure geodesic.  Tangential obstacle hits (incidence
within the scene's tangency threshold) follow the grazing policy: the
trajectory continues straight through, the record is flagged, and the graze
does not count as a reflection.

Phase points are :class:`~curvedbilliards.geodesic.GeodesicState` values;
the time field is carried through flows, so composing flows composes times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .geodesic import GeodesicState, make_state, two_point_distance
from .scene import HitEvent, Scene, TangentialHitError, _first_hit_with_path, reflect

__all__ = [
    "PhasePoint",
    "TrajectoryRecord",
    "BilliardCapError",
    "MAX_TIME_DEFAULT",
    "MAX_REFLECTIONS_DEFAULT",
    "flow",
    "flow_record",
    "shoot_from_boundary",
    "itinerary",
    "itinerary_metric",
    "itinerary_metric_exact",
    "separation_probe",
    "phase_distance",
]

PhasePoint = GeodesicState

MAX_TIME_DEFAULT = 200.0
MAX_REFLECTIONS_DEFAULT = 10_000


class BilliardCapError(RuntimeError):
    """flow() could not reach the requested time within the reflection cap."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """One trajectory: initial and final phase points, hits in between.

    ``status`` is 'exited', 'reached-time', 'trapped-max-time',
    'trapped-max-reflections', or 'chart-exit', with '+tangent' appended if
    a grazing hit occurred.  ``itinerary`` contains 1-based obstacle numbers
    of actual reflections (bounding crossings and grazes excluded).
    """

    initial: GeodesicState
    events: Tuple[HitEvent, ...]
    final: GeodesicState
    time: float
    status: str
    itinerary: Tuple[int, ...]

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("event times must increase strictly")

    @property
    def n_reflections(self) -> int:
        return len(self.itinerary)

    @property
    def tangent_flagged(self) -> bool:
        return self.status.endswith("+tangent")


def _run(
    scene: Scene,
    start: GeodesicState,
    t_budget: float,
    max_reflections: int,
    stop_at_boundary: bool,
) -> TrajectoryRecord:
    t0 = start.time
    state = start
    events = []
    symbols = []
    grazed = False
    status = None

    while True:
        remaining = t_budget - (state.time - t0)
        if remaining <= 0.0:
            status = "trapped-max-time" if stop_at_boundary else "reached-time"
            break
        hit, path, stop = _first_hit_with_path(scene, state, remaining)
        if stop.kind == "chart-exit":
            state = stop.state
            status = "chart-exit"
            break
        state = stop.state
        if hit is None:
            status = "trapped-max-time" if stop_at_boundary else "reached-time"
            break
        events.append(hit)
        if hit.curve == "bounding":
            if stop_at_boundary:
                status = "exited"
                break
            continue  # transparent: keep flying
        if hit.tangential:
            grazed = True
            continue  # grazing policy: straight through, no reflection
        if len(symbols) >= max_reflections:
            status = "trapped-max-reflections"
            break
        w = reflect(scene, hit, state.velocity)
        symbols.append(int(hit.curve) + 1)
        state = make_state(scene.chart, hit.point, w, time=hit.time)

    if grazed:
        status += "+tangent"
    return TrajectoryRecord(
        initial=start,
        events=tuple(events),
        final=state,
        time=state.time - t0,
        status=status,
        itinerary=tuple(symbols),
    )


def flow_record(
    scene: Scene,
    p: PhasePoint,
    t: float,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> TrajectoryRecord:
    """F_t(p) with full bookkeeping; negative t flips the velocity twice."""
    if t == 0.0:
        return TrajectoryRecord(p, (), p, 0.0, "reached-time", ())
    if t < 0.0:
        q = GeodesicState(p.position, -np.asarray(p.velocity), p.time)
        rec = _run(scene, q, -t, max_reflections, stop_at_boundary=False)
        final = GeodesicState(
            rec.final.position, -np.asarray(rec.final.velocity), p.time + t
        )
        return TrajectoryRecord(p, rec.events, final, t, rec.status, rec.itinerary)
    return _run(scene, p, t, max_reflections, stop_at_boundary=False)


def flow(
    scene: Scene,
    p: PhasePoint,
    t: float,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> PhasePoint:
    """The time-t generalised geodesic flow applied to p."""
    rec = flow_record(scene, p, t, max_reflections)
    if rec.status.startswith("trapped-max-reflections"):
        raise BilliardCapError(f"reflection cap {max_reflections} hit before t={t}")
    return rec.final


def shoot_from_boundary(
    scene: Scene,
    u: float,
    omega,
    max_time: float = MAX_TIME_DEFAULT,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> TrajectoryRecord:
    """Launch inward from the bounding parameter u; stop at the exit crossing.

    The record's time is the travelling time between the two boundary
    crossings when status is 'exited'; otherwise a cap fired and the status
    says which.
    """
    from .manifold import inner

    p = scene.bounding.point(u)
    nu = scene.bounding.unit_normal(scene.chart, u)
    start = make_state(scene.chart, p, omega)
    inc = inner(scene.chart, p, start.velocity, nu)
    if inc >= -scene.tangency:
        raise ValueError(f"direction is not strictly inward (incidence {inc:.3g})")
    return _run(scene, start, max_time, max_reflections, stop_at_boundary=True)


def itinerary(record: TrajectoryRecord, n: Optional[int] = None) -> Tuple[int, ...]:
    """First n reflected obstacle numbers (the whole itinerary if shorter)."""
    if n is None:
        return record.itinerary
    return record.itinerary[: int(n)]


def itinerary_metric_exact(a: Sequence[int], b: Sequence[int]) -> Fraction:
    """Exact rational value of the itinerary metric (see itinerary_metric).

    Kept exact so the metric axioms can be checked without float wobble:
    triangle-inequality cases that hold with equality would otherwise fail
    by one ulp.
    """
    a = tuple(a)
    b = tuple(b)
    if a == b:
        return Fraction(0)
    L = min(len(a), len(b))
    rho = sum((Fraction(1, 3 ** (i + 1)) for i in range(L) if a[i] != b[i]), Fraction(0))
    if len(a) != len(b):
        rho += Fraction(1, 2 * 3**L)
    return rho


def itinerary_metric(a: Sequence[int], b: Sequence[int]) -> float:
    """Weighted symbol-disagreement distance, sum of 3^-i over disagreements.

    Sequences of equal length compare position by position.  When lengths
    differ, every position beyond the shorter length counts as disagreeing,
    contributing a closed-form tail of 3^-L / 2.  Both readings together
    keep this a true metric (position-wise delta domination gives the
    triangle inequality), bounded by 1/2.
    """
    return float(itinerary_metric_exact(a, b))


def phase_distance(scene: Scene, p: PhasePoint, q: PhasePoint) -> float:
    """Separation of two phase points: position distance and direction angle.

    Conformal charts preserve angles, so the direction mismatch is the
    Euclidean angle between the component vectors; it combines with the
    Riemannian distance between footpoints in quadrature.
    """
    d_pos = two_point_distance(scene.chart, p.position, q.position, rtol=1e-8)
    a1 = math.atan2(p.velocity[1], p.velocity[0])
    a2 = math.atan2(q.velocity[1], q.velocity[0])
    d_ang = abs((a1 - a2 + math.pi) % (2.0 * math.pi) - math.pi)
    return math.hypot(d_pos, d_ang)


def separation_probe(
    scene: Scene,
    p: PhasePoint,
    q: PhasePoint,
    n: int,
    max_time: float = MAX_TIME_DEFAULT,
) -> Tuple[int, float]:
    """(shared itinerary prefix length up to n, initial phase distance).

    Feeds the empirical hyperbolicity fit: points whose codings agree longer
    should start exponentially closer.  Raises on grazing trajectories,
    whose codings are not well defined.
    """
    recs = []
    for s in (p, q):
        rec = _run(scene, s, max_time, int(n), stop_at_boundary=False)
        if rec.tangent_flagged:
            raise TangentialHitError("separation_probe hit a tangency")
        recs.append(rec)
    ia, ib = recs[0].itinerary[:n], recs[1].itinerary[:n]
    if ia == ib and recs[0].itinerary == recs[1].itinerary:
        prefix = int(n)
    else:
        prefix = 0
        for x, y in zip(ia, ib):
            if x != y:
                break
            prefix += 1
        prefix = min(prefix, int(n))
    return prefix, phase_distance(scene, p, q)
