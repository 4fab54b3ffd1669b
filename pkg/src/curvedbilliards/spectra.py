"""Travelling-time spectra and the structure checks built on them.

A spectrum shoots the billiard from every node of a boundary-parameter x
inward-angle product grid and records where and when each trajectory
leaves, plus its reflection itinerary.  On top of that:

* ``grad_check`` compares the finite-difference derivative of travelling
  time along the boundary (landing point held fixed by re-aiming) against
  the closed-form value -<initial velocity, boundary tangent>_g,
* ``compare_spectra`` measures how far two scenes' spectra deviate on a
  shared grid,
* ``conjugacy_map`` transports phase points between two scenes by flowing
  out of one and back into the other,
* ``uniqueness_experiment`` perturbs one obstacle and tabulates how the
  spectrum deviation grows with the perturbation.

Grid evaluation is embarrassingly parallel; with ``threads > 1`` the rows
are computed in worker processes and reassembled in index order, so the
output is bit-identical to the serial path.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .billiard import (
    MAX_REFLECTIONS_DEFAULT,
    MAX_TIME_DEFAULT,
    BilliardCapError,
    PhasePoint,
    _run,
    flow_record,
)
from .manifold import MetricChart, gauss_curvature, inner
from .scene import BoundaryCurve, Scene, SceneValidationError, TangentialHitError

__all__ = [
    "DELTA_DEFAULT",
    "SpectrumRecord",
    "Spectrum",
    "GradCheckError",
    "compute_spectrum",
    "grad_check",
    "compare_spectra",
    "conjugacy_map",
    "exit_time",
    "UniquenessRow",
    "uniqueness_experiment",
]

# keep launch angles clear of grazing incidence
DELTA_DEFAULT = 0.1


class GradCheckError(RuntimeError):
    """The record is ineligible or re-aiming failed; skip it."""


@dataclass(frozen=True)
class SpectrumRecord:
    """One grid node: launch data, landing data, time, and itinerary."""

    x_param: float
    theta: float
    y_param: float
    exit_theta: float
    time: float
    n_reflections: int
    itinerary: Tuple[int, ...]
    status: str

    def __post_init__(self):
        if self.status == "exited":
            assert math.isfinite(self.time) and self.time > 0.0
            assert math.isfinite(self.y_param)


@dataclass(frozen=True)
class Spectrum:
    """All records of one scene over an n_x by n_theta launch grid."""

    scene_id: str
    n_x: int
    n_theta: int
    delta: float
    max_time: float
    max_reflections: int
    records: Tuple[SpectrumRecord, ...]

    def __post_init__(self):
        assert len(self.records) == self.n_x * self.n_theta

    def exited(self) -> List[SpectrumRecord]:
        return [r for r in self.records if r.status == "exited"]


def _grid_axes(n_x: int, n_theta: int, delta: float):
    xs = np.arange(n_x) / n_x
    thetas = np.linspace(-0.5 * math.pi + delta, 0.5 * math.pi - delta, n_theta)
    return xs, thetas


def _node_record(scene, x, theta, max_time, max_reflections) -> SpectrumRecord:
    state = scene.boundary_state(x, theta)
    rec = _run(scene, state, max_time, max_reflections, stop_at_boundary=True)
    if rec.status == "exited":
        y = scene.bounding.param_of_point(rec.final.position)
        exit_theta = scene.exit_angle(rec.final.position, rec.final.velocity)
    else:
        y = math.nan
        exit_theta = math.nan
    return SpectrumRecord(
        x_param=float(x),
        theta=float(theta),
        y_param=float(y),
        exit_theta=float(exit_theta),
        time=float(rec.time),
        n_reflections=rec.n_reflections,
        itinerary=rec.itinerary,
        status=rec.status,
    )


# -- process-pool plumbing: scenes are rebuilt per worker because the
#    compiled chart closures do not pickle --------------------------------


def _curve_spec(c: BoundaryCurve):
    return (tuple(c.center), c.base_radius, c.cos_coeffs, c.sin_coeffs,
            c.convex, c.outward)


def _scene_spec(scene: Scene):
    return (
        scene.chart.source,
        _curve_spec(scene.bounding),
        tuple(_curve_spec(k) for k in scene.obstacles),
        scene.tangency,
        scene.rtol,
        scene.atol,
    )


@lru_cache(maxsize=8)
def _scene_from_spec(spec) -> Scene:
    source, bounding, obstacles, tangency, rtol, atol = spec
    return Scene(
        MetricChart.from_expression(source),
        BoundaryCurve(*bounding),
        [BoundaryCurve(*k) for k in obstacles],
        tangency=tangency,
        rtol=rtol,
        atol=atol,
        validate=False,
    )


def _spectrum_chunk(payload):
    spec, n_x, n_theta, delta, max_time, max_reflections, lo, hi = payload
    scene = _scene_from_spec(spec)
    xs, thetas = _grid_axes(n_x, n_theta, delta)
    out = []
    for flat in range(lo, hi):
        x = xs[flat // n_theta]
        theta = thetas[flat % n_theta]
        out.append(_node_record(scene, x, theta, max_time, max_reflections))
    return out


def compute_spectrum(
    scene: Scene,
    n_x: int,
    n_theta: int,
    max_time: float = MAX_TIME_DEFAULT,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
    delta: float = DELTA_DEFAULT,
    scene_id: str = "scene",
    threads: int = 1,
) -> Spectrum:
    """Shoot from every (x, theta) grid node and collect the records.

    Per-node failures land in the record's status; the call itself always
    returns a full grid.  The result is deterministic for fixed inputs,
    independent of ``threads``.
    """
    total = n_x * n_theta
    if threads > 1 and total > 1:
        spec = _scene_spec(scene)
        chunk = max(1, -(-total // (threads * 4)))
        payloads = [
            (spec, n_x, n_theta, delta, max_time, max_reflections,
             lo, min(lo + chunk, total))
            for lo in range(0, total, chunk)
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_spectrum_chunk, payloads))
        records = [r for part in parts for r in part]
    else:
        xs, thetas = _grid_axes(n_x, n_theta, delta)
        records = [
            _node_record(scene, x, theta, max_time, max_reflections)
            for x in xs
            for theta in thetas
        ]
    return Spectrum(
        scene_id=scene_id,
        n_x=n_x,
        n_theta=n_theta,
        delta=delta,
        max_time=max_time,
        max_reflections=max_reflections,
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# gradient of travelling time along the boundary
# ---------------------------------------------------------------------------


def _wrap_param(d: float) -> float:
    return (d + 0.5) % 1.0 - 0.5


def _aimed_time(
    scene: Scene,
    u: float,
    theta0: float,
    y_target: float,
    itin: Tuple[int, ...],
    max_time: float,
    max_reflections: int,
    y_tol: float = 1e-8,
) -> float:
    """Travelling time from boundary parameter u to the fixed landing y.

    The launch angle is adjusted by a secant iteration so the trajectory
    (same itinerary as the reference record) lands on y_target.
    """

    def landing(theta: float) -> Tuple[float, float]:
        state = scene.boundary_state(u, theta)
        rec = _run(scene, state, max_time, max_reflections, stop_at_boundary=True)
        if rec.status != "exited" or rec.itinerary != itin:
            raise GradCheckError(
                f"re-aim from u={u:.6f} lost the reference branch ({rec.status})"
            )
        y = scene.bounding.param_of_point(rec.final.position)
        return _wrap_param(y - y_target), rec.time

    th_a = theta0
    f_a, t_a = landing(th_a)
    if abs(f_a) <= y_tol:
        return t_a
    th_b = theta0 + max(1e-6, abs(f_a))
    f_b, t_b = landing(th_b)
    for _ in range(60):
        if f_b == f_a:
            break
        th_c = th_b - f_b * (th_b - th_a) / (f_b - f_a)
        f_c, t_c = landing(th_c)
        if abs(f_c) <= y_tol:
            return t_c
        th_a, f_a = th_b, f_b
        th_b, f_b, t_b = th_c, f_c, t_c
    raise GradCheckError(f"secant failed to hold the landing point from u={u:.6f}")


def grad_check(
    scene: Scene,
    record: SpectrumRecord,
    h: float = 1e-5,
    max_time: float = MAX_TIME_DEFAULT,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> Tuple[float, float]:
    """(numeric, analytic) boundary derivative of the travelling time.

    numeric is a central difference in the launch parameter with the
    landing point held fixed by re-aiming; analytic is the projection of
    the initial velocity on the unit boundary tangent, negated.  Both are
    per unit g-arc length.  Ineligible records raise GradCheckError.
    """
    if record.status != "exited":
        raise GradCheckError(f"record status {record.status!r} is not 'exited'")
    x = record.x_param
    c, cp, _ = scene.bounding.derivatives(x)
    tau_norm = math.sqrt(inner(scene.chart, c, cp, cp))
    t_plus = _aimed_time(scene, (x + h) % 1.0, record.theta, record.y_param,
                         record.itinerary, max_time, max_reflections)
    t_minus = _aimed_time(scene, (x - h) % 1.0, record.theta, record.y_param,
                          record.itinerary, max_time, max_reflections)
    numeric = (t_plus - t_minus) / (2.0 * h * tau_norm)
    v0 = scene.boundary_state(x, record.theta).velocity
    analytic = -inner(scene.chart, c, v0, cp) / tau_norm
    return numeric, analytic


# ---------------------------------------------------------------------------
# spectrum comparison
# ---------------------------------------------------------------------------


def compare_spectra(a: Spectrum, b: Spectrum) -> Tuple[float, float, float]:
    """(sup_dev, mean_dev, unmatched fraction) over a shared grid.

    Times are compared node-by-node where both records exited; nodes whose
    statuses differ count as unmatched.
    """
    if (a.n_x, a.n_theta, a.delta) != (b.n_x, b.n_theta, b.delta):
        raise ValueError("spectra were computed on different grids")
    sup_dev = 0.0
    dev_sum = 0.0
    n_dev = 0
    n_unmatched = 0
    for ra, rb in zip(a.records, b.records):
        if (ra.x_param, ra.theta) != (rb.x_param, rb.theta):
            raise ValueError("spectra were computed on different grids")
        if ra.status != rb.status:
            n_unmatched += 1
            continue
        if ra.status.startswith("exited"):
            d = abs(ra.time - rb.time)
            sup_dev = max(sup_dev, d)
            dev_sum += d
            n_dev += 1
    mean_dev = dev_sum / n_dev if n_dev else 0.0
    return sup_dev, mean_dev, n_unmatched / len(a.records)


# ---------------------------------------------------------------------------
# conjugacy between two scenes
# ---------------------------------------------------------------------------


def conjugacy_map(
    sceneK: Scene,
    sceneL: Scene,
    p: PhasePoint,
    t_exit: float,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> PhasePoint:
    """Flow p out of sceneK for t_exit, then back into sceneL for -t_exit.

    With t_exit beyond p's escape time this realizes the conjugacy between
    the two billiard flows; on outward boundary states it is the identity.
    """
    fwd = flow_record(sceneK, p, t_exit, max_reflections)
    if fwd.status.startswith("trapped-max-reflections"):
        raise BilliardCapError(f"reflection cap in the forward flow at t={t_exit}")
    if fwd.tangent_flagged:
        raise TangentialHitError("forward flow grazed an obstacle")
    back = flow_record(sceneL, fwd.final, -t_exit, max_reflections)
    if back.status.startswith("trapped-max-reflections"):
        raise BilliardCapError(f"reflection cap in the backward flow at t={t_exit}")
    if back.tangent_flagged:
        raise TangentialHitError("backward flow grazed an obstacle")
    return back.final


def exit_time(
    scene: Scene,
    p: PhasePoint,
    max_time: float = MAX_TIME_DEFAULT,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
) -> float:
    """Time for p to cross the bounding curve, reflections included."""
    rec = _run(scene, p, max_time, max_reflections, stop_at_boundary=True)
    if rec.status != "exited":
        raise BilliardCapError(f"no boundary crossing within caps ({rec.status})")
    return rec.time


# ---------------------------------------------------------------------------
# obstacle-perturbation sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniquenessRow:
    eps: float
    hausdorff: float
    sup_dev: float
    mean_dev: float
    unmatched: float
    note: str = ""


def _chart_hausdorff(a: BoundaryCurve, b: BoundaryCurve, n: int = 2048) -> float:
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    pa = np.stack([a.point(u) for u in t])
    pb = np.stack([b.point(u) for u in t])
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def _verify_nonpositive_curvature(scene: Scene, n: int = 24, tol: float = 1e-8):
    lo, hi = scene.bounding.center - scene.bounding.max_radius, \
        scene.bounding.center + scene.bounding.max_radius
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    worst = -math.inf
    for x in xs:
        for y in ys:
            if scene.contains((x, y)):
                worst = max(worst, gauss_curvature(scene.chart, (x, y)))
    if worst > tol:
        raise ValueError(f"scene has positive curvature (max {worst:.3g})")


def uniqueness_experiment(
    scene: Scene,
    epsilons: Sequence[float],
    n_x: int = 64,
    n_theta: int = 64,
    obstacle_index: int = 0,
    harmonic: int = 2,
    max_time: float = MAX_TIME_DEFAULT,
    max_reflections: int = MAX_REFLECTIONS_DEFAULT,
    delta: float = DELTA_DEFAULT,
    threads: int = 1,
) -> List[UniquenessRow]:
    """Perturb one obstacle's radial profile and tabulate spectrum drift.

    For each eps the chosen obstacle's cosine coefficient of the given
    harmonic is shifted by eps times its base radius (eps is a relative
    radial amplitude, so a desk-scale sweep up to 0.1 keeps the obstacle
    strictly convex), the spectrum is recomputed on the same grid, and the
    row reports the obstacle Hausdorff distance (chart coordinates) next
    to the spectrum deviation.  Perturbations that break scene validation
    are reported as skipped rows.
    """
    _verify_nonpositive_curvature(scene)
    base = compute_spectrum(scene, n_x, n_theta, max_time, max_reflections,
                            delta, scene_id="base", threads=threads)
    target = scene.obstacles[obstacle_index]
    rows = []
    for eps in epsilons:
        coeffs = list(target.cos_coeffs) + [0.0] * (harmonic - len(target.cos_coeffs))
        coeffs[harmonic - 1] += eps * target.base_radius
        perturbed = BoundaryCurve(
            target.center, target.base_radius, tuple(coeffs), target.sin_coeffs,
            target.convex, target.outward,
        )
        obstacles = list(scene.obstacles)
        obstacles[obstacle_index] = perturbed
        try:
            pert_scene = Scene(scene.chart, scene.bounding, obstacles,
                               tangency=scene.tangency,
                               rtol=scene.rtol, atol=scene.atol)
        except SceneValidationError as err:
            rows.append(UniquenessRow(eps, math.nan, math.nan, math.nan,
                                      math.nan, f"skipped: {err}"))
            continue
        spec = compute_spectrum(pert_scene, n_x, n_theta, max_time,
                                max_reflections, delta,
                                scene_id=f"eps={eps:g}", threads=threads)
        sup_dev, mean_dev, unmatched = compare_spectra(base, spec)
        rows.append(UniquenessRow(
            eps, _chart_hausdorff(target, perturbed), sup_dev, mean_dev, unmatched,
        ))
    return rows
