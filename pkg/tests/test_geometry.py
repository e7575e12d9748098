"""Tests for geometry/: solids, containment, dilation and unit rescaling."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from geometry.solids import Tube, Prism, Ball, ConvexWitness, WitnessKind, frame_from_axis, \
    line_metric, solid_to_dict, solid_from_dict, domain_box, check_member
from geometry.containment import contained_in_convex, dilate_solid, essentially_distinct, \
    contained_mask, point_segment_distance
from geometry.family import SolidArrays, family_scale, line_metric_matrix
from geometry.rescale import AffineMap, unit_map, unit_rescale, map_solid, circumscribed_ellipsoid
from util.exceptions import GeometryException, ScaleMismatchException, ContainmentException

DELTA = 2.0 ** -5

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _tube(anchor=(0, 0, 0), direction=(0, 0, 1), radius=DELTA, length=1.0):
    return Tube(np.array(anchor, dtype=float), np.array(direction, dtype=float), radius, length)

def _rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])

def _sample_tube(tube, n, rng):
    """Uniform-ish points inside a capsule, for a Monte-Carlo oracle."""
    p0, p1 = tube.endpoints
    lam = rng.uniform(-0.05, 1.05, n)
    frame = frame_from_axis(tube.direction)
    ang = rng.uniform(0, 2 * np.pi, n)
    rad = tube.radius * np.sqrt(rng.uniform(0, 1, n))
    pts = p0 + lam[:, None] * (p1 - p0)
    pts = pts + rad[:, None] * (np.cos(ang)[:, None] * frame[0] + np.sin(ang)[:, None] * frame[1])
    dist = point_segment_distance(pts, p0, p1)
    return pts[dist <= tube.radius]

def _in_capsule(points, tube):
    p0, p1 = tube.endpoints
    return point_segment_distance(points, p0, p1) <= tube.radius + 1e-12

# ===========================================================================

class TestTube:

    def test_direction_normalized(self):
        t = _tube(direction=(0, 0, 1 + 1e-9))
        npt.assert_allclose(np.linalg.norm(t.direction), 1.0, atol=1e-12)

    def test_rejects_zero_radius(self):
        with pytest.raises(GeometryException):
            _tube(radius=0.0)

    def test_capsule_volume(self):
        t = _tube(radius=0.1)
        assert t.volume == pytest.approx(math.pi * 0.01 + 4 / 3 * math.pi * 0.001, rel=1e-12)

    def test_endpoints(self):
        p0, p1 = _tube(anchor=(0.1, 0, 0)).endpoints
        npt.assert_allclose(p0, [0.1, 0, -0.5])
        npt.assert_allclose(p1, [0.1, 0, 0.5])

    def test_json_fields(self):
        data = _tube(anchor=(0.1, 0.2, 0.3)).to_dict()
        assert set(data) == {"anchor", "dir", "radius", "length", "scale"}
        back = Tube.from_dict(data)
        npt.assert_allclose(back.anchor, [0.1, 0.2, 0.3])
        assert back.scale == DELTA

class TestPrism:

    def test_volume_and_dims(self):
        p = Prism(np.zeros(3), np.eye(3), (0.05, 0.25, 0.5))
        assert p.dims == pytest.approx((0.1, 0.5, 1.0))
        assert p.volume == pytest.approx(0.05)

    def test_rejects_left_handed_frame(self):
        with pytest.raises(GeometryException):
            Prism(np.zeros(3), np.diag([1.0, 1.0, -1.0]), (0.1, 0.1, 0.5))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(GeometryException):
            Prism(np.zeros(3), [[1, 0, 0], [0.5, 1, 0], [0, 0, 1]], (0.1, 0.1, 0.5))

    def test_json_uses_full_dims(self):
        p = Prism(np.zeros(3), np.eye(3), (0.05, 0.25, 0.5))
        data = p.to_dict()
        assert data["dims"] == pytest.approx([0.1, 0.5, 1.0])
        assert solid_from_dict(solid_to_dict(p)).half_dims == pytest.approx(p.half_dims)

class TestFamilyMembers:

    def test_unit_tube_accepted(self):
        t = _tube(anchor=(0.6, 0.0, 0.8))
        assert check_member(t) is t

    def test_anchor_outside_unit_ball(self):
        with pytest.raises(GeometryException, match=r"B\(0, 1\)"):
            check_member(_tube(anchor=(0.8, 0.8, 0.0)))

    def test_radius_above_one(self):
        with pytest.raises(GeometryException, match="radius"):
            check_member(_tube(radius=1.5))

    def test_prism_thickness_at_most_width(self):
        check_member(Prism(np.zeros(3), np.eye(3), (0.05, 0.25, 0.5)))
        with pytest.raises(GeometryException, match="s <= t <= 1"):
            check_member(Prism(np.zeros(3), np.eye(3), (0.25, 0.05, 0.5)))

    def test_prism_width_at_most_one(self):
        with pytest.raises(GeometryException, match="s <= t <= 1"):
            check_member(Prism(np.zeros(3), np.eye(3), (0.25, 0.75, 0.5)))

    def test_witness_shapes_stay_unbounded(self):
        assert domain_box().t == pytest.approx(2.0)
        assert _tube(radius=2.0).radius == 2.0

class TestConvexWitness:

    @pytest.mark.parametrize("shape, expected", [
        (Ball(np.zeros(3), 0.5), 4 / 3 * math.pi * 0.125),
        (Prism(np.zeros(3), np.eye(3), (0.1, 0.2, 0.3)), 0.048),
        (Tube(np.zeros(3), [1, 0, 0], 0.2, 1.0), math.pi * 0.04 + 4 / 3 * math.pi * 0.008),
    ])
    def test_volume_matches_formula(self, shape, expected):
        w = ConvexWitness(shape)
        assert abs(w.volume - expected) <= 1e-9 * expected

    def test_kind(self):
        assert ConvexWitness(domain_box()).kind is WitnessKind.PRISM

    def test_dict_restores_kind(self):
        w = ConvexWitness(Ball(np.ones(3) * 0.1, 0.3), label="b")
        back = ConvexWitness.from_dict(w.to_dict())
        assert back.kind is WitnessKind.BALL
        assert back.volume == pytest.approx(w.volume)

class TestEssentiallyDistinct:

    def test_identical_tubes(self):
        assert not essentially_distinct(_tube(), _tube())

    def test_parallel_offset_ten_delta(self):
        a = _tube()
        b = _tube(anchor=(10 * DELTA, 0, 0))
        assert essentially_distinct(a, b)
        assert essentially_distinct(b, a)

    def test_coaxial_small_shift(self):
        assert not essentially_distinct(_tube(), _tube(anchor=(0, 0, DELTA / 10)))

    def test_scale_mismatch(self):
        with pytest.raises(ScaleMismatchException, match="scale mismatch"):
            essentially_distinct(_tube(), _tube(radius=2 * DELTA))

    def test_matches_monte_carlo_oracle(self, rng):
        a = _tube()
        b = _tube(anchor=(10 * DELTA, 0, 0))
        # A point of b outside 2a proves b is not inside 2a
        pts = _sample_tube(b, 10000, rng)
        assert not np.all(_in_capsule(pts, dilate_solid(a, 2)))
        near = _tube(anchor=(0, 0, DELTA / 10))
        pts = _sample_tube(near, 10000, rng)
        assert np.all(_in_capsule(pts, dilate_solid(_tube(), 2)))

class TestContainedInConvex:

    def test_tube_in_own_bounding_prism(self):
        t = _tube()
        assert contained_in_convex(t, ConvexWitness(dilate_solid(t.bounding_prism(), 1.01)))

    def test_rotated_prism_excludes_tube(self):
        t = _tube()
        box = t.bounding_prism()
        rotated = Prism(box.center, box.frame @ _rot_x(math.pi / 2).T, box.half_dims)
        assert not contained_in_convex(t, rotated)

    def test_tilted_tube_exits_thin_prism(self, rng):
        t_width = 0.25
        prism = Prism(np.zeros(3), np.eye(3), (DELTA / 2, t_width / 2, 0.5))
        tilt = 2 * t_width
        tube = _tube(direction=(0, math.sin(tilt), math.cos(tilt)))
        assert not contained_in_convex(tube, prism)
        pts = _sample_tube(tube, 5000, rng)
        inside = np.all(np.abs(pts) <= np.array(prism.half_dims), axis=1)
        assert not np.all(inside)

    def test_monotone_under_witness_dilation(self):
        t = _tube(anchor=(0.1, 0, 0))
        w = Ball(np.zeros(3), 0.7)
        assert contained_in_convex(t, w)
        for k in (1.0, 1.5, 3.0):
            assert contained_in_convex(t, dilate_solid(w, k))

    def test_vectorized_matches_scalar(self, rng):
        tubes = [_tube(anchor=rng.uniform(-0.3, 0.3, 3)) for _ in range(20)]
        w = ConvexWitness(Prism(np.zeros(3), np.eye(3), (0.2, 0.2, 0.6)))
        mask = contained_mask(SolidArrays(tubes), w)
        assert mask.tolist() == [contained_in_convex(t, w) for t in tubes]

class TestDilateSolid:

    def test_identity(self):
        t = _tube(anchor=(0.1, 0.2, 0))
        d = dilate_solid(t, 1)
        assert d.radius == t.radius and d.length == t.length
        npt.assert_allclose(d.anchor, t.anchor)

    def test_factor_two_tube(self):
        d = dilate_solid(_tube(), 2)
        assert d.radius == pytest.approx(2 * DELTA)
        assert d.length == pytest.approx(2.0)
        npt.assert_allclose(d.direction, [0, 0, 1])

    @pytest.mark.parametrize("k", [0.5, 2.0, 3.0])
    def test_volume_scaling_law(self, k):
        for s in (Prism(np.zeros(3), np.eye(3), (0.1, 0.2, 0.5)), _tube(radius=0.1), Ball(np.zeros(3), 0.3)):
            assert dilate_solid(s, k).volume == pytest.approx(k ** 3 * s.volume, rel=1e-12)

    def test_rejects_non_positive(self):
        with pytest.raises(GeometryException):
            dilate_solid(_tube(), 0)

class TestUnitRescale:
    RHO = 0.25

    def _reference(self):
        return ConvexWitness(_tube(radius=self.RHO))

    def test_self_rescaling_is_ball_like(self):
        (image,), _ = unit_rescale([self._reference().shape], self._reference())
        assert 0.5 <= image.radius <= 2
        assert 0.5 <= image.length / 2 + image.radius <= 2

    def test_coaxial_tube_becomes_thicker_tube(self):
        images, _ = unit_rescale([_tube(anchor=(0, 0, 0.1))], self._reference())
        image = images[0]
        npt.assert_allclose(np.abs(image.direction), [0, 0, 1], atol=1e-12)
        ratio = image.radius / (DELTA / self.RHO)
        assert 0.5 <= ratio <= 2

    def test_inverse_round_trip(self):
        tube = _tube(anchor=(0.05, -0.02, 0.1), direction=np.array([0.1, 0.05, 1]) / np.linalg.norm([0.1, 0.05, 1]))
        phi = unit_map(self._reference())
        back = map_solid(map_solid(tube, phi), phi.inverse())
        npt.assert_allclose(back.anchor, tube.anchor, atol=1e-9)
        npt.assert_allclose(back.direction, tube.direction, atol=1e-9)
        assert back.radius == pytest.approx(tube.radius, abs=1e-9)
        assert back.length == pytest.approx(tube.length, abs=1e-9)

    def test_determinant_matches_ball_volume(self):
        ref = self._reference()
        phi = unit_map(ref)
        _, _, axes = circumscribed_ellipsoid(ref.shape)
        ellipsoid = 4 / 3 * math.pi * np.prod(axes)
        assert abs(phi.det) * ellipsoid == pytest.approx(4 / 3 * math.pi, rel=1e-6)

    def test_preserves_containment(self):
        inner = _tube(anchor=(0, 0, 0.05))
        outer = dilate_solid(inner, 2)
        phi = unit_map(self._reference())
        assert contained_in_convex(map_solid(inner, phi), map_solid(outer, phi))

    def test_aligned_prism_round_trip(self):
        prism = Prism(np.array([0.01, 0, 0]), np.eye(3), (0.05, 0.1, 0.3))
        phi = unit_map(ConvexWitness(Prism(np.zeros(3), np.eye(3), (0.2, 0.2, 0.6))))
        back = map_solid(map_solid(prism, phi), phi.inverse())
        npt.assert_allclose(back.center, prism.center, atol=1e-9)
        npt.assert_allclose(back.half_dims, prism.half_dims, atol=1e-9)

    def test_offender_reported(self):
        far = _tube(anchor=(0.9, 0, 0))
        with pytest.raises(ContainmentException) as info:
            unit_rescale([_tube(), far], self._reference())
        assert [i for i, _ in info.value.offenders] == [1]

class TestAffineMap:

    def test_rejects_singular(self):
        with pytest.raises(GeometryException):
            AffineMap(np.zeros((3, 3)), np.zeros(3))

class TestLineMetric:

    def test_orientation_free(self):
        a = _tube()
        b = _tube(direction=(0, 0, -1))
        assert line_metric(a, b) == pytest.approx(0.0)

    def test_matrix_matches_scalar(self, rng):
        tubes = [_tube(anchor=rng.uniform(-0.2, 0.2, 3)) for _ in range(6)]
        arr = SolidArrays(tubes)
        mat = line_metric_matrix(arr.p0, arr.p1, arr.p0, arr.p1)
        for i, a in enumerate(tubes):
            for j, b in enumerate(tubes):
                assert mat[i, j] == pytest.approx(line_metric(a, b))

class TestFamilyScale:

    def test_common_scale(self):
        assert family_scale([_tube(), _tube(anchor=(0.1, 0, 0))]) == DELTA

    def test_mismatch(self):
        with pytest.raises(ScaleMismatchException):
            family_scale([_tube(), _tube(radius=0.1)])
