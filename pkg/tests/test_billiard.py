import math

import numpy as np
import pytest

from curvedbilliards.billiard import (
    BilliardCapError,
    flow,
    flow_record,
    itinerary,
    itinerary_metric,
    itinerary_metric_exact,
    separation_probe,
    shoot_from_boundary,
)
from curvedbilliards.geodesic import make_state
from curvedbilliards.manifold import euclidean, poincare_disk
from curvedbilliards.scene import BoundaryCurve, Scene


def hyp_dist(p, q):
    p, q = np.asarray(p), np.asarray(q)
    d2 = np.sum((p - q) ** 2)
    den = (1.0 - np.sum(p**2)) * (1.0 - np.sum(q**2))
    return float(np.arccosh(1.0 + 2.0 * d2 / den))


@pytest.fixture(scope="module")
def single(euclid=None):
    return Scene(euclidean(), BoundaryCurve.circle((0, 0), 4.0),
                 [BoundaryCurve.circle((0, 0), 1.0)])


@pytest.fixture(scope="module")
def two_disc():
    return Scene(euclidean(), BoundaryCurve.circle((0, 0), 4.0),
                 [BoundaryCurve.circle((-2, 0), 1.0), BoundaryCurve.circle((2, 0), 1.0)])


@pytest.fixture(scope="module")
def hyp_two_disc():
    return Scene(poincare_disk(), BoundaryCurve.circle((0, 0), 0.8),
                 [BoundaryCurve.circle((-0.45, 0), 0.15),
                  BoundaryCurve.circle((0.45, 0), 0.15)])


@pytest.fixture(scope="module")
def hyp_displaced():
    return Scene(poincare_disk(), BoundaryCurve.circle((0, 0), 0.8),
                 [BoundaryCurve.circle((0.2, 0.1), 0.2)])


# -- flow --------------------------------------------------------------------


def test_flow_zero_time_is_identity(single):
    p = make_state(single.chart, (-3, 0), (1, 0))
    assert flow(single, p, 0.0) is p


def test_flow_retroreflection(single):
    p = make_state(single.chart, (-3, 0), (1, 0))
    q = flow(single, p, 4.0)
    assert q.position == pytest.approx((-3.0, 0.0), abs=1e-9)
    assert q.velocity == pytest.approx((-1.0, 0.0), abs=1e-9)
    assert q.time == pytest.approx(4.0)


def test_flow_transparent_boundary(single):
    # misses the obstacle, crosses the rim, keeps going straight
    p = make_state(single.chart, (-3, 2.5), (1, 0))
    rec = flow_record(single, p, 10.0)
    assert rec.final.position == pytest.approx((7.0, 2.5), abs=1e-9)
    assert rec.status == "reached-time"
    assert [e.curve for e in rec.events] == ["bounding"]
    assert rec.itinerary == ()


def test_flow_composition(two_disc):
    rng = np.random.default_rng(3)
    done = 0
    while done < 10:
        pos = rng.uniform(-3.5, 3.5, size=2)
        if not two_disc.contains(pos, margin=0.05):
            continue
        th = rng.uniform(0, 2 * np.pi)
        p = make_state(two_disc.chart, pos, (math.cos(th), math.sin(th)))
        s, t = rng.uniform(0.5, 3.0, size=2)
        a = flow(two_disc, flow(two_disc, p, s), t)
        b = flow(two_disc, p, s + t)
        assert a.position == pytest.approx(b.position, abs=1e-7)
        assert a.velocity == pytest.approx(b.velocity, abs=1e-7)
        done += 1


def test_flow_reversibility_euclid(two_disc):
    rng = np.random.default_rng(4)
    done = 0
    while done < 100:
        pos = rng.uniform(-3.5, 3.5, size=2)
        if not two_disc.contains(pos, margin=0.05):
            continue
        th = rng.uniform(0, 2 * np.pi)
        t = rng.uniform(0.5, 10.0)
        p = make_state(two_disc.chart, pos, (math.cos(th), math.sin(th)))
        rec = flow_record(two_disc, p, t)
        if rec.tangent_flagged:
            continue
        q = rec.final
        back = flow(two_disc, make_state(two_disc.chart, q.position, -q.velocity), t)
        assert back.position == pytest.approx(p.position, abs=1e-7)
        assert -back.velocity == pytest.approx(p.velocity, abs=1e-7)
        done += 1


def test_flow_negative_time(two_disc):
    p = make_state(two_disc.chart, (0, 0.5), (1, 0.2))
    q = flow(two_disc, p, 2.5)
    r = flow(two_disc, q, -2.5)
    assert r.position == pytest.approx(p.position, abs=1e-7)
    assert r.velocity == pytest.approx(p.velocity, abs=1e-7)
    assert r.time == pytest.approx(0.0, abs=1e-12)


def test_flow_reflection_cap_raises(two_disc):
    p = make_state(two_disc.chart, (0, 0), (1, 0))  # the bouncing corridor
    with pytest.raises(BilliardCapError):
        flow(two_disc, p, 100.0, max_reflections=10)


# -- shoot_from_boundary -----------------------------------------------------


def test_diameter_of_empty_scene():
    scene = Scene(euclidean(), BoundaryCurve.circle((0, 0), 1.0), [])
    rec = shoot_from_boundary(scene, 0.0, (-1, 0))
    assert rec.status == "exited"
    assert rec.time == pytest.approx(2.0, abs=1e-9)
    assert rec.final.position == pytest.approx((-1.0, 0.0), abs=1e-8)
    assert rec.itinerary == ()


def test_shoot_through_center_reflects_back(single):
    rec = shoot_from_boundary(single, 0.0, (-1, 0))
    assert rec.status == "exited"
    assert rec.time == pytest.approx(6.0, abs=1e-9)
    assert rec.final.position == pytest.approx((4.0, 0.0), abs=1e-8)
    assert rec.final.velocity == pytest.approx((1.0, 0.0), abs=1e-9)
    assert rec.itinerary == (1,)
    assert abs(single.bounding.implicit(rec.final.position)) <= 1e-8


def test_travelling_time_is_sum_of_segment_lengths(hyp_displaced):
    scene = hyp_displaced
    for theta in (-0.9, -0.35, 0.0, 0.2, 0.75):
        s0 = scene.boundary_state(0.5, theta)
        rec = shoot_from_boundary(scene, 0.5, s0.velocity)
        assert rec.status == "exited"
        pts = [rec.initial.position] + [e.point for e in rec.events]
        total = sum(hyp_dist(a, b) for a, b in zip(pts, pts[1:]))
        assert total == pytest.approx(rec.time, abs=1e-8)
        assert abs(scene.bounding.implicit(rec.final.position)) <= 1e-8


def test_trapped_max_time(hyp_displaced):
    s0 = hyp_displaced.boundary_state(0.5, 0.1)
    rec = shoot_from_boundary(hyp_displaced, 0.5, s0.velocity, max_time=0.05)
    assert rec.status == "trapped-max-time"


def test_shoot_rejects_outward_direction(single):
    with pytest.raises(ValueError, match="inward"):
        shoot_from_boundary(single, 0.0, (1, 0))


def test_event_times_strictly_increase(two_disc):
    rec = flow_record(two_disc, make_state(two_disc.chart, (0, 0), (1, 0)), 9.0)
    times = [e.time for e in rec.events]
    assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
    assert rec.time == pytest.approx(9.0)


# -- itineraries -------------------------------------------------------------


def test_corridor_alternating_itinerary(two_disc):
    p = make_state(two_disc.chart, (0, 0), (-1, 0))
    rec = flow_record(two_disc, p, 12.0)
    assert rec.itinerary == (1, 2, 1, 2, 1, 2)
    assert itinerary(rec, 4) == (1, 2, 1, 2)
    assert itinerary(rec) == rec.itinerary


def test_empty_itinerary(single):
    rec = flow_record(single, make_state(single.chart, (-3, 2.5), (1, 0)), 1.0)
    assert itinerary(rec, 5) == ()


def test_corridor_alternates_in_poincare(hyp_two_disc):
    p = make_state(hyp_two_disc.chart, (0, 0), (1, 0))
    rec = flow_record(hyp_two_disc, p, 8.0)
    assert len(rec.itinerary) >= 4
    assert rec.itinerary[:4] == (2, 1, 2, 1)


def test_min_gap_between_distinct_obstacles(hyp_two_disc):
    b = hyp_two_disc.min_obstacle_separation
    p = make_state(hyp_two_disc.chart, (0, 0), (1, 0))
    rec = flow_record(hyp_two_disc, p, 8.0)
    hits = [e for e in rec.events if e.curve != "bounding"]
    for e1, e2 in zip(hits, hits[1:]):
        if e1.curve != e2.curve:
            assert e2.time - e1.time >= b - 1e-9


# -- itinerary metric --------------------------------------------------------


def test_metric_examples():
    assert itinerary_metric((1, 2, 1), (1, 2, 1)) == 0.0
    # equal length, first symbol only
    assert itinerary_metric((1, 2, 2), (2, 2, 2)) == pytest.approx(1.0 / 3.0, abs=1e-15)
    # long everywhere-different pair approximates the geometric tail 1/2
    a = tuple([1] * 40)
    b = tuple([2] * 40)
    assert itinerary_metric(a, b) == pytest.approx(0.5, abs=1e-15)


def test_metric_length_mismatch_tail():
    # agreeing prefix, then one sequence ends: tail 3^-2 / 2
    assert itinerary_metric((1, 2), (1, 2, 1)) == pytest.approx(0.5 / 9.0, abs=1e-15)


def test_metric_axioms_on_random_triples():
    # exact rational arithmetic: several triangle cases hold with equality
    from fractions import Fraction

    rng = np.random.default_rng(0)
    seqs = [
        tuple(rng.integers(1, 4, size=rng.integers(0, 9)).tolist()) for _ in range(60)
    ]
    for _ in range(1000):
        a, b, c = (seqs[i] for i in rng.integers(0, len(seqs), size=3))
        dab = itinerary_metric_exact(a, b)
        assert dab == itinerary_metric_exact(b, a)
        assert Fraction(0) <= dab <= Fraction(1, 2)
        assert (dab == 0) == (a == b)
        assert dab <= itinerary_metric_exact(a, c) + itinerary_metric_exact(c, b)
        assert itinerary_metric(a, b) == pytest.approx(float(dab), abs=1e-16)


# -- separation probe --------------------------------------------------------


def test_probe_identical_points(hyp_two_disc):
    p = make_state(hyp_two_disc.chart, (0, 0.01), (1, 0))
    prefix, dist = separation_probe(hyp_two_disc, p, p, 5)
    assert prefix == 5
    assert dist == 0.0


def test_probe_divergent_first_symbol(two_disc):
    p = make_state(two_disc.chart, (0, 0.5), (1, 0))
    q = make_state(two_disc.chart, (0, 0.5), (-1, 0))
    prefix, dist = separation_probe(two_disc, p, q, 5)
    assert prefix == 0
    assert dist > 0.0
