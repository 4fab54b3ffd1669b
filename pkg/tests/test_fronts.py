"""Front construction, convexity, propagation, reflection, and arrivals.

Closed-form oracles: the planar involute of a circle (straight-line
flights from tangents), geodesic curvature of circles in both charts
(-1/r in the plane, -coth(rho) in the hyperbolic disk), the expanding
wavefront law kappa(t) = kappa0/(1 + kappa0 t) in the plane, and the
mirror equation B+ = B- + 2 kappa / cos(theta) at an obstacle hit.
"""

import math

import numpy as np
import pytest

from curvedbilliards.fronts import (
    Front,
    FrontError,
    build_orthogonal_front,
    front_alignment,
    front_convexity,
    orthogonal_hits,
    orthogonality_residual,
    propagate_front,
    reflect_front,
    split_by_hit,
)
from curvedbilliards.manifold import euclidean, norm, poincare_disk
from curvedbilliards.scene import BoundaryCurve, Scene

BIG = BoundaryCurve.circle((0.0, 0.0), 4.0)
DISK = BoundaryCurve.circle((0.0, 0.0), 0.8)


@pytest.fixture(scope="module")
def euclid_empty():
    return Scene(euclidean(), BIG)


@pytest.fixture(scope="module")
def euclid_single():
    return Scene(euclidean(), BIG, [BoundaryCurve.circle((0.0, 0.0), 1.0)])


@pytest.fixture(scope="module")
def euclid_two():
    return Scene(
        euclidean(),
        BIG,
        [BoundaryCurve.circle((-2.0, 0.0), 1.0), BoundaryCurve.circle((2.0, 0.0), 1.0)],
    )


@pytest.fixture(scope="module")
def poincare_empty():
    return Scene(poincare_disk(), DISK)


@pytest.fixture(scope="module")
def poincare_two():
    return Scene(
        poincare_disk(),
        DISK,
        [BoundaryCurve.circle((-0.45, 0.0), 0.15), BoundaryCurve.circle((0.45, 0.0), 0.15)],
    )


@pytest.fixture(scope="module")
def poincare_displaced():
    return Scene(poincare_disk(), DISK, [BoundaryCurve.circle((0.2, 0.1), 0.2)])


def circle_front(scene, radius, center=(0.0, 0.0), n=256, inward=False):
    """Exact circle samples with radial normals (orthogonal in any chart)."""
    th = 2.0 * np.pi * np.arange(n) / n
    e_r = np.stack([np.cos(th), np.sin(th)], axis=1)
    pts = np.asarray(center, dtype=float) + radius * e_r
    nrm = -e_r if inward else e_r
    return Front.from_samples(scene, pts, nrm, closed=True)


def wavy_front(scene, a=0.03, n=512):
    """Strictly convex perturbed circle with exact tangent-rotated normals."""
    th = 2.0 * np.pi * np.arange(n) / n
    r = 1.0 + a * np.cos(3.0 * th)
    dr = -3.0 * a * np.sin(3.0 * th)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    tx = dr * np.cos(th) - r * np.sin(th)
    ty = dr * np.sin(th) + r * np.cos(th)
    nrm = np.stack([ty, -tx], axis=1)
    return Front.from_samples(scene, pts, nrm, closed=True)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


class TestBuildOrthogonalFront:
    def test_euclid_matches_circle_involute(self, euclid_single):
        # tiny arc keeps the finite-difference defect at the 1e-8 scale
        # (the one-sided end stencils double the interior constant)
        span = (0.0, 0.0035)
        arc = 2.0 * np.pi * span[1]
        lam = arc + 0.1
        fr = build_orthogonal_front(euclid_single, euclid_single.obstacles[0],
                                    span, lam, n_samples=256)
        s = fr.us
        expect = np.stack(
            [np.cos(s) - (lam - s) * np.sin(s), np.sin(s) + (lam - s) * np.cos(s)],
            axis=1,
        )
        assert np.max(np.abs(fr.points - expect)) < 1e-9
        tangents = np.stack([-np.sin(s), np.cos(s)], axis=1)
        assert np.max(np.abs(fr.normals - tangents)) < 1e-9
        assert np.max(np.abs(orthogonality_residual(euclid_single, fr))) < 1e-8
        assert fr.strictly_convex
        # string-length curvature: |f| = 1/(lam - s)
        assert np.max(np.abs(fr.f + 1.0 / (lam - s))) < 1e-3

    def test_poincare_orthogonality(self, poincare_two):
        curve = poincare_two.obstacles[0]
        fr = build_orthogonal_front(poincare_two, curve, (0.0, 0.1), lam=0.7,
                                    n_samples=768)
        assert np.max(np.abs(orthogonality_residual(poincare_two, fr))) < 1e-6
        assert fr.strictly_convex
        unit_err = [abs(norm(poincare_two.chart, p, w) - 1.0)
                    for p, w in zip(fr.points, fr.normals)]
        assert max(unit_err) < 1e-9

    def test_lambda_shorter_than_arc_rejected(self, euclid_single):
        with pytest.raises(FrontError, match="clear"):
            build_orthogonal_front(euclid_single, euclid_single.obstacles[0],
                                   (0.0, 0.2), lam=0.5)

    def test_lambda_pushing_out_of_region_rejected(self, euclid_single):
        with pytest.raises(FrontError, match="free region"):
            build_orthogonal_front(euclid_single, euclid_single.obstacles[0],
                                   (0.0, 0.1), lam=10.0, n_samples=64)


# ---------------------------------------------------------------------------
# convexity scalar
# ---------------------------------------------------------------------------


class TestFrontConvexity:
    def test_unit_circle_euclid(self, euclid_empty):
        fr = circle_front(euclid_empty, 1.0)
        assert np.max(np.abs(fr.f + 1.0)) < 1e-3
        assert abs(front_convexity(euclid_empty, fr, 0) + 1.0) < 1e-3

    def test_radius_two_circle_euclid(self, euclid_empty):
        fr = circle_front(euclid_empty, 2.0)
        assert np.max(np.abs(fr.f + 0.5)) < 1e-3

    def test_straight_segment_flat(self, euclid_empty):
        xs = np.linspace(-1.0, 1.0, 64)
        pts = np.stack([xs, np.zeros_like(xs)], axis=1)
        nrm = np.tile([0.0, 1.0], (64, 1))
        fr = Front.from_samples(euclid_empty, pts, nrm, closed=False)
        assert np.max(np.abs(fr.f)) < 1e-6

    def test_hyperbolic_circle_coth(self, poincare_empty):
        fr = circle_front(poincare_empty, math.tanh(0.5))
        assert np.max(np.abs(fr.f + 1.0 / math.tanh(1.0))) < 1e-3

    def test_too_few_samples_rejected(self, euclid_empty):
        with pytest.raises(FrontError, match="5 samples"):
            Front.from_samples(
                euclid_empty,
                [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
                [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
                closed=True,
            )

    def test_inward_normals_flip_sign(self, euclid_empty):
        fr = circle_front(euclid_empty, 1.0, inward=True)
        assert np.max(np.abs(fr.f - 1.0)) < 1e-3
        assert not fr.strictly_convex


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


class TestPropagateFront:
    def test_zero_time_is_identity(self, euclid_empty):
        fr = circle_front(euclid_empty, 1.0, n=32)
        assert propagate_front(euclid_empty, fr, 0.0) is fr

    def test_euclid_circle_grows_linearly(self, euclid_empty):
        fr = propagate_front(euclid_empty, circle_front(euclid_empty, 1.0), 1.0)
        radii = np.hypot(fr.points[:, 0], fr.points[:, 1])
        assert np.max(np.abs(radii - 2.0)) < 1e-9
        assert np.max(np.abs(fr.f + 0.5)) < 1e-3
        assert fr.provenance == "propagated(t=1)"

    def test_poincare_circle_radius_and_convexity(self, poincare_empty):
        fr0 = circle_front(poincare_empty, math.tanh(0.5))
        fr = propagate_front(poincare_empty, fr0, 1.0)
        radii = np.hypot(fr.points[:, 0], fr.points[:, 1])
        assert np.max(np.abs(radii - math.tanh(1.0))) < 1e-8
        assert np.max(np.abs(fr.f + 1.0 / math.tanh(2.0))) < 1e-3

    def test_normals_stay_unit(self, poincare_empty):
        fr = propagate_front(poincare_empty, circle_front(poincare_empty, 0.3, n=64), 0.7)
        errs = [abs(norm(poincare_empty.chart, p, w) - 1.0)
                for p, w in zip(fr.points, fr.normals)]
        assert max(errs) < 1e-9

    def test_euclid_wavefront_curvature_law(self, euclid_empty):
        fr0 = wavy_front(euclid_empty)
        k0 = -fr0.f
        for t in (0.3, 0.7):
            frt = propagate_front(euclid_empty, fr0, t)
            expect = k0 / (1.0 + k0 * t)
            assert np.max(np.abs(-frt.f - expect)) < 1e-4

    def test_raw_convexity_decreases_euclid(self, euclid_empty):
        fr = wavy_front(euclid_empty, n=128)
        prev = fr.f_raw
        for t in (0.25, 0.5, 1.0):
            cur = propagate_front(euclid_empty, fr, t).f_raw
            assert np.all(cur < prev + 1e-6)
            prev = cur

    def test_raw_convexity_decreases_poincare(self, poincare_empty):
        fr = circle_front(poincare_empty, 0.25, center=(0.1, 0.0), n=128)
        prev = fr.f_raw
        for t in (0.25, 0.5, 0.75):
            cur = propagate_front(poincare_empty, fr, t).f_raw
            assert np.all(cur < prev + 1e-6)
            prev = cur

    def test_collision_with_obstacle_raises(self, euclid_single):
        fr = circle_front(euclid_single, 2.0, n=64, inward=True)
        with pytest.raises(FrontError, match="split"):
            propagate_front(euclid_single, fr, 1.5)


# ---------------------------------------------------------------------------
# reflection
# ---------------------------------------------------------------------------


class TestReflectFront:
    def test_mirror_equation_at_normal_incidence(self, euclid_single):
        # point source at (-3, 0): the mid ray meets the unit obstacle head-on
        # after flying 1.5 from the radius-0.5 source circle.
        n = 257
        th = np.linspace(-0.12, 0.12, n)
        src = np.array([-3.0, 0.0])
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        fr0 = Front.from_samples(euclid_single, src + 0.5 * e, e, closed=False)
        fr = reflect_front(euclid_single, fr0)
        assert fr.provenance == "reflected"
        assert fr.strictly_convex
        b_minus = 1.0 / 2.0      # wavefront curvature on arrival, source 2 away
        b_plus = b_minus + 2.0   # obstacle curvature 1, cos(0) = 1
        # the common phase sits eps past the last hit; the mid ray (which
        # hits first) has evolved beyond the surface by s_mid by then
        t_of = lambda a: -0.5 + 3.0 * math.cos(a) - math.sqrt(9.0 * math.cos(a) ** 2 - 8.0)
        s_mid = (t_of(0.12) - t_of(0.0)) + 1e-3
        expect = -1.0 / (1.0 / b_plus + s_mid)
        assert abs(fr.f[n // 2] - expect) < 2.5e-3
        assert np.max(np.abs(orthogonality_residual(euclid_single, fr))) < 1e-4

    def test_flat_front_becomes_dispersing(self, euclid_single):
        n = 65
        ys = np.linspace(-0.2, 0.2, n)
        pts = np.stack([np.full(n, -2.5), ys], axis=1)
        nrm = np.tile([1.0, 0.0], (n, 1))
        fr0 = Front.from_samples(euclid_single, pts, nrm, closed=False)
        assert np.max(np.abs(fr0.f)) < 1e-6
        fr = reflect_front(euclid_single, fr0)
        assert np.all(fr.f < 0.0)
        # head-on sample: B+ = 2, evolved to the common phase past the surface
        s_mid = (2.5 - math.sqrt(1.0 - 0.2**2)) - 1.5 + 1e-3
        assert abs(fr.f[n // 2] + 1.0 / (0.5 + s_mid)) < 2.5e-3

    def test_mixed_targets_rejected(self, euclid_two):
        fr = circle_front(euclid_two, 0.3, n=64)
        with pytest.raises(FrontError):
            reflect_front(euclid_two, fr)

    def test_poincare_reflection_stays_convex(self, poincare_displaced):
        n = 97
        th = np.linspace(-0.25, 0.25, n)
        src = np.array([-0.35, 0.0])
        heading = math.atan2(0.1, 0.55)  # aim the fan at the obstacle center
        e = np.stack([np.cos(th + heading), np.sin(th + heading)], axis=1)
        fr0 = Front.from_samples(poincare_displaced, src + 0.05 * e, e, closed=False)
        fr = reflect_front(poincare_displaced, fr0)
        assert fr.strictly_convex


# ---------------------------------------------------------------------------
# splitting by hit target
# ---------------------------------------------------------------------------


class TestSplitByHit:
    def test_circle_between_two_discs(self, euclid_two):
        fr = circle_front(euclid_two, 0.3, n=256)
        pieces = split_by_hit(euclid_two, fr)
        ids = [cid for _, cid in pieces]
        assert set(ids) == {0, 1, "bounding"}
        assert len(pieces) >= 4
        assert all(sub.n_samples >= 5 for sub, _ in pieces)
        sub = next(sub for sub, cid in pieces if cid == 0)
        refl = reflect_front(euclid_two, sub)
        assert refl.strictly_convex


# ---------------------------------------------------------------------------
# orthogonal arrivals
# ---------------------------------------------------------------------------


class TestOrthogonalHits:
    def test_concentric_circles_all_orthogonal(self, euclid_empty):
        x = circle_front(euclid_empty, 1.0, n=64)
        y = circle_front(euclid_empty, 2.0, n=256)
        ang = front_alignment(euclid_empty, x, y)
        assert np.max(np.abs(ang)) < 1e-6
        assert orthogonal_hits(euclid_empty, x, y) == list(range(64))

    def test_offset_target_two_isolated_zeros(self, euclid_empty):
        x = circle_front(euclid_empty, 0.5, n=128)
        y = circle_front(euclid_empty, 2.0, center=(0.3, 0.1), n=256)
        ang = front_alignment(euclid_empty, x, y)
        assert np.all(np.isfinite(ang))
        flips = np.flatnonzero(np.sign(ang) != np.sign(np.roll(ang, -1)))
        assert len(flips) == 2
        hits = orthogonal_hits(euclid_empty, x, y)
        assert 1 <= len(hits) <= 8
        for i in hits:
            assert min((i - j) % 128 for j in flips) <= 2 or \
                min((j - i) % 128 for j in flips) <= 2

    def test_reflected_arrivals_poincare(self, poincare_displaced):
        x = circle_front(poincare_displaced, 0.12, center=(-0.35, 0.0), n=96)
        y = circle_front(poincare_displaced, 0.7, n=256)
        ang = front_alignment(poincare_displaced, x, y)
        assert np.all(np.isfinite(ang))
        hits = orthogonal_hits(poincare_displaced, x, y)
        assert len(hits) >= 1
        # zeros are isolated: the alignment moves through them transversally
        flips = np.flatnonzero(np.sign(ang) != np.sign(np.roll(ang, -1)))
        for j in flips:
            assert abs(ang[(j + 1) % 96] - ang[j]) > 1e-4
