"""Scenario-driven command line: load a scene, run one subcommand, write
CSV/JSON artifacts (and PNG views of them unless --no-plot).

Exit codes: 0 success, 1 scenario/scene validation failure, 2 numerical
failure beyond the configured caps, 3 property-suite failure (verify).
Identical scenario + flags + seed produce byte-identical CSV/JSON files;
parallel grid evaluation (--threads) reassembles rows in grid order, so it
never changes the output.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .billiard import (
    BilliardCapError,
    flow,
    flow_record,
    itinerary_metric_exact,
    phase_distance,
    shoot_from_boundary,
)
from .fronts import (
    FrontError,
    build_orthogonal_front,
    orthogonality_residual,
    propagate_front,
    reflect_front,
)
from .geodesic import IntegrationError, integrate, make_state
from .scenario import Scenario, ScenarioError, build_scene, load_scenario
from .scene import Scene, SceneValidationError, TangentialHitError
from .spectra import (
    GradCheckError,
    compare_spectra,
    compute_spectrum,
    conjugacy_map,
    exit_time,
    grad_check,
    uniqueness_experiment,
)
from .tables import (
    encode_itinerary,
    front_table,
    scene_summary,
    spectrum_table,
    trajectory_table,
    uniqueness_table,
    write_json,
    write_table,
)

__all__ = ["main", "run", "EXIT_OK", "EXIT_VALIDATION", "EXIT_NUMERICAL", "EXIT_PROPERTY"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_PROPERTY = 3

_NUMERICAL_ERRORS = (
    BilliardCapError,
    FrontError,
    GradCheckError,
    TangentialHitError,
    IntegrationError,
)


class _Parser(argparse.ArgumentParser):
    """Usage problems are validation failures, not stock argparse exit 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario YAML file")
    common.add_argument("--out", help="artifact directory (scenario 'out' field)")
    common.add_argument("--grid", help="launch grid as NxM")
    common.add_argument("--max-time", type=float, dest="max_time")
    common.add_argument("--max-reflections", type=int, dest="max_reflections")
    common.add_argument("--tol", type=float,
                        help="integrator rtol (atol follows as rtol/10)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--no-plot", action="store_true", dest="no_plot",
                        help="skip the PNG views, write CSV/JSON only")

    parser = _Parser(prog="curvedbilliards",
                     description="billiard flow experiments on curved charts")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("spectrum", parents=[common],
                   help="travelling-time spectrum over the launch grid")
    p = sub.add_parser("compare", parents=[common],
                       help="spectrum deviation between two scenarios")
    p.add_argument("--against", required=True, help="second scenario YAML file")
    sub.add_parser("fronts", parents=[common],
                   help="build, propagate and reflect a convex front")
    sub.add_parser("gradcheck", parents=[common],
                   help="boundary derivative of travelling time, two ways")
    p = sub.add_parser("conjugacy", parents=[common],
                       help="flow-conjugacy residuals between two scenarios")
    p.add_argument("--against", required=True, help="second scenario YAML file")
    sub.add_parser("itinerary", parents=[common],
                   help="one trajectory with its reflection coding")
    sub.add_parser("uniqueness", parents=[common],
                   help="spectrum drift under obstacle perturbations")
    sub.add_parser("verify", parents=[common],
                   help="run the property suite on the scenario")
    return parser


@dataclass
class _Job:
    scenario: Scenario
    scene: Scene
    out: Path
    threads: int
    plot: bool


def _load_job(args) -> _Job:
    scenario = load_scenario(args.scenario).with_overrides(
        out=args.out,
        grid=args.grid,
        max_time=args.max_time,
        max_reflections=args.max_reflections,
        rtol=args.tol,
        seed=args.seed,
    )
    scene = build_scene(scenario)
    out = Path(scenario.out)
    out.mkdir(parents=True, exist_ok=True)
    return _Job(scenario, scene, out, max(1, args.threads), not args.no_plot)


def _load_against(job: _Job, args) -> Tuple[Scenario, Scene]:
    """Second scenario for compare/conjugacy, same flag overrides applied."""
    other = load_scenario(args.against).with_overrides(
        grid=args.grid,
        max_time=args.max_time,
        max_reflections=args.max_reflections,
        rtol=args.tol,
        seed=args.seed,
    )
    return other, build_scene(other)


def _spectrum_of(job: _Job, scenario: Scenario, scene: Scene):
    n_x, n_theta = job.scenario.grid  # the primary scenario fixes the grid
    return compute_spectrum(
        scene, n_x, n_theta,
        max_time=scenario.max_time,
        max_reflections=scenario.max_reflections,
        delta=job.scenario.delta,
        scene_id=scenario.name,
        threads=job.threads,
    )


# -- subcommands -------------------------------------------------------------


def _cmd_spectrum(job: _Job, args) -> int:
    spectrum = _spectrum_of(job, job.scenario, job.scene)
    header, rows = spectrum_table(spectrum)
    csv_path = write_table(job.out / "spectrum.csv", header, rows)
    statuses: dict = {}
    for r in spectrum.records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    write_json(job.out / "spectrum.json", {
        "scene": scene_summary(job.scene),
        "scene_id": spectrum.scene_id,
        "grid": list(job.scenario.grid),
        "delta": spectrum.delta,
        "max_time": spectrum.max_time,
        "max_reflections": spectrum.max_reflections,
        "statuses": dict(sorted(statuses.items())),
    })
    if job.plot:
        from .plotting import save_spectrum_plot

        save_spectrum_plot(job.out / "spectrum.png", spectrum)
    print(f"wrote {csv_path} ({len(rows)} records)")
    return EXIT_OK


def _cmd_compare(job: _Job, args) -> int:
    other, other_scene = _load_against(job, args)
    spec_a = _spectrum_of(job, job.scenario, job.scene)
    spec_b = _spectrum_of(job, other, other_scene)
    sup_dev, mean_dev, unmatched = compare_spectra(spec_a, spec_b)
    rows = []
    for ra, rb in zip(spec_a.records, spec_b.records):
        dev = (abs(ra.time - rb.time)
               if ra.status == rb.status == "exited" else math.nan)
        rows.append((ra.x_param, ra.theta, ra.time, rb.time, dev,
                     ra.status, rb.status))
    write_table(
        job.out / "compare.csv",
        ("x_param", "theta", "time_a", "time_b", "abs_dev", "status_a", "status_b"),
        rows,
    )
    write_json(job.out / "compare.json", {
        "scenario_a": job.scenario.name,
        "scenario_b": other.name,
        "grid": list(job.scenario.grid),
        "sup_dev": sup_dev,
        "mean_dev": mean_dev,
        "unmatched": unmatched,
    })
    print(f"sup_dev={sup_dev:.3e} mean_dev={mean_dev:.3e} unmatched={unmatched:.3f}")
    return EXIT_OK


def _cmd_fronts(job: _Job, args) -> int:
    spec = job.scenario.front
    if spec is None:
        raise ScenarioError("front: section required by the fronts subcommand")
    scene = job.scene
    curve = scene.bounding if spec.curve == "bounding" else scene.obstacles[spec.curve]
    base = build_orthogonal_front(scene, curve, spec.span, spec.flight,
                                  n_samples=spec.samples)
    fronts = [base]
    labels = ["t=0"]
    steps = []
    error: Optional[str] = None
    for t in spec.times:
        try:
            fronts.append(propagate_front(scene, base, t))
            labels.append(f"t={t:g}")
        except FrontError as err:
            error = f"t={t:g}: {err}"
            break
    if spec.reflect:
        fronts.append(reflect_front(scene, base, eps=spec.eps,
                                    max_time=job.scenario.max_time))
        labels.append("reflected")
    for i, (front, label) in enumerate(zip(fronts, labels)):
        name = "front_reflected.csv" if label == "reflected" else f"front_{i:02d}.csv"
        header, rows = front_table(front)
        write_table(job.out / name, header, rows)
        steps.append({
            "file": name,
            "label": label,
            "samples": front.n_samples,
            "f_min": float(front.f.min()),
            "f_max": float(front.f.max()),
            "orthogonality_max": float(
                np.abs(orthogonality_residual(scene, front)).max()
            ),
            "strictly_convex": front.strictly_convex,
        })
    write_json(job.out / "fronts.json", {
        "scene": scene_summary(scene),
        "curve": spec.curve,
        "span": list(spec.span),
        "flight": spec.flight,
        "steps": steps,
        "stopped": error,
    })
    if job.plot:
        from .plotting import save_fronts_plot

        save_fronts_plot(job.out / "fronts.png", scene, fronts, labels)
    print(f"wrote {len(fronts)} front tables to {job.out}"
          + (f" (stopped: {error})" if error else ""))
    return EXIT_OK


def _cmd_gradcheck(job: _Job, args) -> int:
    spec = job.scenario.gradcheck
    spectrum = _spectrum_of(job, job.scenario, job.scene)
    eligible = spectrum.exited()
    if len(eligible) > spec.limit:
        idx = np.unique(np.linspace(0, len(eligible) - 1, spec.limit).astype(int))
        eligible = [eligible[i] for i in idx]
    entries = []
    skipped = 0
    for rec in eligible:
        try:
            numeric, analytic = grad_check(
                job.scene, rec, h=spec.h,
                max_time=job.scenario.max_time,
                max_reflections=job.scenario.max_reflections,
            )
        except GradCheckError:
            skipped += 1
            continue
        entries.append((rec.x_param, rec.theta, numeric, analytic,
                        abs(numeric - analytic)))
    errs = np.array([e[4] for e in entries]) if entries else np.array([])
    write_table(
        job.out / "gradcheck.csv",
        ("x_param", "theta", "numeric", "analytic", "abs_err"),
        entries,
    )
    write_json(job.out / "gradcheck.json", {
        "scene": scene_summary(job.scene),
        "grid": list(job.scenario.grid),
        "h": spec.h,
        "checked": len(entries),
        "skipped": skipped,
        "median_abs_err": float(np.median(errs)) if errs.size else math.nan,
        "p95_abs_err": float(np.quantile(errs, 0.95)) if errs.size else math.nan,
        "max_abs_err": float(errs.max()) if errs.size else math.nan,
    })
    if job.plot:
        from .plotting import save_gradcheck_plot

        save_gradcheck_plot(job.out / "gradcheck.png", entries)
    med = float(np.median(errs)) if errs.size else math.nan
    print(f"checked {len(entries)} records (skipped {skipped}), "
          f"median |numeric-analytic| = {med:.3e}")
    return EXIT_OK


def _draw_free_point(scene: Scene, rng: np.random.Generator, margin: float):
    box = scene.bounding.max_radius
    cx, cy = scene.bounding.center
    for _ in range(10_000):
        p = np.array([cx + rng.uniform(-box, box), cy + rng.uniform(-box, box)])
        if scene.contains(p, margin=margin):
            return p
    raise RuntimeError("free-region sampling failed (scene almost full?)")


def _cmd_conjugacy(job: _Job, args) -> int:
    other, scene_l = _load_against(job, args)
    spec = job.scenario.conjugacy
    scene_k = job.scene
    rng = np.random.default_rng(job.scenario.seed)
    margin = min(k.min_radius for k in
                 [scene_k.bounding] + scene_k.obstacles) * 0.05
    entries = []
    skipped = 0
    caps = dict(max_time=job.scenario.max_time,
                max_reflections=job.scenario.max_reflections)

    for _ in range(spec.pairs):
        p = _draw_free_point(scene_k, rng, margin)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        t = rng.uniform(spec.t_min, spec.t_max)
        state = make_state(scene_k.chart, p, (math.cos(ang), math.sin(ang)))
        try:
            t_exit = exit_time(scene_k, state, **caps) + spec.margin
            lhs = flow(scene_l, conjugacy_map(scene_k, scene_l, state, t_exit), t)
            moved = flow(scene_k, state, t)
            if scene_k.bounding.implicit(moved.position) >= 0.0:
                # already past the chamber: no escape flight needed
                t_exit2 = spec.margin
            else:
                t_exit2 = exit_time(scene_k, moved, **caps) + spec.margin
            rhs = conjugacy_map(scene_k, scene_l, moved, t_exit2)
        except _NUMERICAL_ERRORS:
            skipped += 1
            continue
        gap = max(
            float(np.abs(lhs.position - rhs.position).max()),
            float(np.abs(lhs.velocity - rhs.velocity).max()),
        )
        entries.append(("relation", p[0], p[1],
                        state.velocity[0], state.velocity[1], t, gap))

    half = 0.5 * math.pi - job.scenario.delta
    for _ in range(spec.boundary_pairs):
        u = rng.uniform(0.0, 1.0)
        theta = rng.uniform(-half, half)
        inward = scene_k.boundary_state(u, theta)
        state = make_state(scene_k.chart, inward.position, -inward.velocity)
        try:
            image = conjugacy_map(scene_k, scene_l, state, spec.boundary_flight)
        except _NUMERICAL_ERRORS:
            skipped += 1
            continue
        gap = max(
            float(np.abs(image.position - state.position).max()),
            float(np.abs(image.velocity - state.velocity).max()),
        )
        entries.append(("boundary", state.position[0], state.position[1],
                        state.velocity[0], state.velocity[1],
                        spec.boundary_flight, gap))

    write_table(
        job.out / "conjugacy.csv",
        ("kind", "x", "y", "v1", "v2", "t", "residual"),
        entries,
    )
    rel = [e[6] for e in entries if e[0] == "relation"]
    bnd = [e[6] for e in entries if e[0] == "boundary"]
    write_json(job.out / "conjugacy.json", {
        "scenario_a": job.scenario.name,
        "scenario_b": other.name,
        "relation_draws": len(rel),
        "boundary_draws": len(bnd),
        "skipped": skipped,
        "max_relation_residual": max(rel) if rel else math.nan,
        "max_boundary_residual": max(bnd) if bnd else math.nan,
    })
    if job.plot:
        from .plotting import save_conjugacy_plot

        save_conjugacy_plot(job.out / "conjugacy.png", entries)
    print(f"relation residual max {max(rel) if rel else math.nan:.3e} "
          f"({len(rel)} draws), boundary identity max "
          f"{max(bnd) if bnd else math.nan:.3e} ({len(bnd)} draws)")
    return EXIT_OK


def _cmd_itinerary(job: _Job, args) -> int:
    spec = job.scenario.itinerary
    scene = job.scene
    state = scene.boundary_state(spec.x, spec.theta)
    record = shoot_from_boundary(
        scene, spec.x, state.velocity,
        max_time=job.scenario.max_time,
        max_reflections=job.scenario.max_reflections,
    )
    header, rows = trajectory_table(record)
    write_table(job.out / "trajectory.csv", header, rows)
    write_json(job.out / "itinerary.json", {
        "scene": scene_summary(scene),
        "x_param": spec.x,
        "theta": spec.theta,
        "status": record.status,
        "time": record.time,
        "n_reflections": record.n_reflections,
        "itinerary": list(record.itinerary),
    })
    if job.plot:
        from .plotting import save_trajectory_plot

        n_steps = 240
        dt = record.time / n_steps
        points = [state.position]
        p = state
        for _ in range(n_steps):
            p = flow(scene, p, dt,
                     max_reflections=job.scenario.max_reflections)
            points.append(p.position)
        save_trajectory_plot(job.out / "trajectory.png", scene, points,
                             record.events)
    print(f"status {record.status}, time {record.time:.6g}, "
          f"itinerary [{encode_itinerary(record.itinerary)}]")
    return EXIT_OK


def _cmd_uniqueness(job: _Job, args) -> int:
    spec = job.scenario.uniqueness
    if not job.scene.obstacles:
        raise ScenarioError("uniqueness.obstacle: scenario has no obstacles")
    n_x, n_theta = job.scenario.grid
    rows = uniqueness_experiment(
        job.scene, spec.epsilons, n_x, n_theta,
        obstacle_index=spec.obstacle, harmonic=spec.harmonic,
        max_time=job.scenario.max_time,
        max_reflections=job.scenario.max_reflections,
        delta=job.scenario.delta, threads=job.threads,
    )
    header, table = uniqueness_table(rows)
    write_table(job.out / "uniqueness.csv", header, table)
    if job.plot:
        from .plotting import save_uniqueness_plot

        save_uniqueness_plot(job.out / "uniqueness.png", rows)
    for r in rows:
        print(f"eps={r.eps:<8g} hausdorff={r.hausdorff:.3e} "
              f"sup_dev={r.sup_dev:.3e} {r.note}")
    return EXIT_OK


# -- verify: the scenario-level property suite -------------------------------


def _check_drift(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    scene = job.scene
    half = 0.5 * math.pi - job.scenario.delta
    worst = 0.0
    for _ in range(spec.samples):
        state = scene.boundary_state(rng.uniform(0, 1), rng.uniform(-half, half))
        path, _ = integrate(scene.chart, state, 5.0,
                            rtol=scene.rtol, atol=scene.atol)
        worst = max(worst, path.max_drift)
    return {"passed": worst <= 1e-9, "max_drift": worst, "flight": 5.0}


def _check_composition(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    scene = job.scene
    half = 0.5 * math.pi - job.scenario.delta
    worst = 0.0
    used = 0
    for _ in range(spec.samples):
        state = scene.boundary_state(rng.uniform(0, 1), rng.uniform(-half, half))
        s, t = rng.uniform(0.3, 1.2, size=2)
        try:
            two_leg = flow(scene, flow(scene, state, s), t)
            one_leg = flow(scene, state, s + t)
            worst = max(worst, phase_distance(scene, two_leg, one_leg))
        except _NUMERICAL_ERRORS:
            continue
        used += 1
    return {"passed": used > 0 and worst <= 1e-7, "max_gap": worst, "used": used}


def _check_reversibility(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    scene = job.scene
    half = 0.5 * math.pi - job.scenario.delta
    worst = 0.0
    used = 0
    for _ in range(spec.samples):
        state = scene.boundary_state(rng.uniform(0, 1), rng.uniform(-half, half))
        t = rng.uniform(0.5, 1.5)
        try:
            fwd = flow(scene, state, t)
            back = flow(scene, make_state(scene.chart, fwd.position,
                                          -fwd.velocity), t)
        except _NUMERICAL_ERRORS:
            continue
        gap = phase_distance(
            scene, make_state(scene.chart, back.position, -back.velocity), state
        )
        worst = max(worst, gap)
        used += 1
    return {"passed": used > 0 and worst <= 1e-7, "max_gap": worst, "used": used}


def _check_time_additivity(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    scene = job.scene
    half = 0.5 * math.pi - job.scenario.delta
    worst = 0.0
    for _ in range(spec.samples):
        state = scene.boundary_state(rng.uniform(0, 1), rng.uniform(-half, half))
        rec = flow_record(scene, state, rng.uniform(0.5, 2.0),
                          max_reflections=job.scenario.max_reflections)
        worst = max(worst, abs((rec.final.time - rec.initial.time) - rec.time))
    return {"passed": worst == 0.0, "max_gap": worst}


def _check_spectrum_determinism(job: _Job, rng) -> dict:
    n_x, n_theta = job.scenario.verify.grid
    runs = [
        compute_spectrum(
            job.scene, n_x, n_theta,
            max_time=job.scenario.max_time,
            max_reflections=job.scenario.max_reflections,
            delta=job.scenario.delta, scene_id="verify",
        )
        for _ in range(2)
    ]
    same = runs[0].records == runs[1].records
    return {"passed": bool(same), "grid": [n_x, n_theta]}


def _check_itinerary_metric(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    n_sym = max(1, len(job.scene.obstacles))
    failures = 0
    for _ in range(spec.triples):
        seqs = [
            tuple(rng.integers(1, n_sym + 1, size=rng.integers(0, 7)))
            for _ in range(3)
        ]
        a, b, c = seqs
        ok = (
            itinerary_metric_exact(a, b) == itinerary_metric_exact(b, a)
            and itinerary_metric_exact(a, c)
            <= itinerary_metric_exact(a, b) + itinerary_metric_exact(b, c)
            and itinerary_metric_exact(a, b) <= Fraction(1, 2)
            and (itinerary_metric_exact(a, b) == 0) == (a == b)
        )
        failures += 0 if ok else 1
    return {"passed": failures == 0, "triples": spec.triples, "failures": failures}


def _check_gradient_law(job: _Job, rng) -> dict:
    spec = job.scenario.verify
    n_x, n_theta = spec.grid
    spectrum = compute_spectrum(
        job.scene, n_x, n_theta,
        max_time=job.scenario.max_time,
        max_reflections=job.scenario.max_reflections,
        delta=job.scenario.delta, scene_id="verify",
    )
    eligible = spectrum.exited()
    if len(eligible) > spec.gradcheck:
        idx = np.unique(np.linspace(0, len(eligible) - 1,
                                    spec.gradcheck).astype(int))
        eligible = [eligible[i] for i in idx]
    errs = []
    for rec in eligible:
        try:
            numeric, analytic = grad_check(
                job.scene, rec,
                max_time=job.scenario.max_time,
                max_reflections=job.scenario.max_reflections,
            )
        except GradCheckError:
            continue
        errs.append(abs(numeric - analytic))
    median = float(np.median(errs)) if errs else math.nan
    return {"passed": len(errs) >= 3 and median <= 1e-4,
            "checked": len(errs), "median_abs_err": median}


_VERIFY_CHECKS = (
    ("unit-speed-drift", _check_drift),
    ("flow-composition", _check_composition),
    ("reversibility", _check_reversibility),
    ("time-additivity", _check_time_additivity),
    ("spectrum-determinism", _check_spectrum_determinism),
    ("itinerary-metric-axioms", _check_itinerary_metric),
    ("gradient-law", _check_gradient_law),
)


def _cmd_verify(job: _Job, args) -> int:
    results = []
    for name, check in _VERIFY_CHECKS:
        rng = np.random.default_rng(job.scenario.seed)  # fresh per check
        outcome = check(job, rng)
        results.append({"name": name, **outcome})
        state = "ok  " if outcome["passed"] else "FAIL"
        detail = " ".join(
            f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}"
            for k, v in outcome.items() if k != "passed"
        )
        print(f"{state} {name:<24} {detail}")
    all_passed = all(r["passed"] for r in results)
    write_json(job.out / "verify.json", {
        "scenario": job.scenario.name,
        "scene": scene_summary(job.scene),
        "seed": job.scenario.seed,
        "checks": results,
        "all_passed": all_passed,
    })
    print("verify: " + ("all checks passed" if all_passed else "FAILURES above"))
    return EXIT_OK if all_passed else EXIT_PROPERTY


_SUBCOMMANDS = {
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
    "fronts": _cmd_fronts,
    "gradcheck": _cmd_gradcheck,
    "conjugacy": _cmd_conjugacy,
    "itinerary": _cmd_itinerary,
    "uniqueness": _cmd_uniqueness,
    "verify": _cmd_verify,
}


def run(subcommand: str, scenario, **overrides) -> int:
    """Programmatic entry point mirroring the command line."""
    argv = [subcommand, "--scenario", str(scenario)]
    for key, val in overrides.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif val is not None:
            argv.extend([flag, str(val)])
    return main(argv)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = _load_job(args)
        return _SUBCOMMANDS[args.subcommand](job, args)
    except (ScenarioError, SceneValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
