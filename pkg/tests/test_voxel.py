"""Tests for voxel/: rasterization, dilation, covering numbers, ball densities
and the KVOX format."""

import itertools
import math

import numpy as np
import numpy.testing as npt
import pytest

from geometry.solids import Tube, Prism, Ball, domain_box
from geometry.containment import dilate_solid
from voxel.grid import VoxelSet, rasterize, rasterize_family, solid_cells, dilate_set, \
    covering_number, covering_profile, ball_density, ball_counts, CellMembership, cell_centers
from voxel import kvox
from util.exceptions import VoxelException

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _random_set(rng, k=4, p=0.03):
    n = 2 ** (k + 1)
    return VoxelSet(rng.uniform(size=(n, n, n)) < p, 2.0 ** -k)

def _single_cell(k, index):
    e = np.zeros((2 ** (k + 1),) * 3, dtype=bool)
    e[index] = True
    return VoxelSet(e, 2.0 ** -k)

def _naive_dilate(occ, cells):
    """Double loop Chebyshev dilation reference."""
    out = np.zeros_like(occ)
    n = occ.shape
    for idx in zip(*np.nonzero(occ)):
        sl = tuple(slice(max(i - cells, 0), min(i + cells + 1, m)) for i, m in zip(idx, n))
        out[sl] = True
    return out

def _naive_covering(occ, b):
    count = 0
    n = occ.shape[0]
    for i, j, k in itertools.product(range(0, n, b), repeat=3):
        if occ[i:i + b, j:j + b, k:k + b].any():
            count += 1
    return count

# ===========================================================================

class TestVoxelSet:

    def test_popcount_cache(self, rng):
        e = _random_set(rng)
        assert e.popcount == int(e.occupancy.sum())
        assert e.volume == e.popcount * e.scale ** 3

    def test_immutable(self):
        e = VoxelSet.empty(2.0 ** -3)
        with pytest.raises(ValueError):
            e.occupancy[0, 0, 0] = True

    def test_non_dyadic_scale(self):
        with pytest.raises(VoxelException):
            VoxelSet.empty(0.3)

    def test_depth_range(self):
        assert VoxelSet.empty(2.0 ** -2).shape == (8, 8, 8)
        with pytest.raises(VoxelException, match="grid depth"):
            VoxelSet.empty(0.5)

    def test_union_volume_subadditive(self, rng):
        a, b = _random_set(rng), _random_set(rng)
        assert (a | b).volume <= a.volume + b.volume
        disjoint = a - b
        assert (disjoint | b).volume == pytest.approx(disjoint.volume + b.volume)

class TestRasterize:

    def test_z_tube_volume(self, z_tube):
        e = rasterize(z_tube, 2.0 ** -4)
        analytic = math.pi * z_tube.radius ** 2
        assert analytic / 2 <= e.volume <= 2 * analytic

    def test_domain_box_fills_grid(self):
        e = rasterize(domain_box(), 2.0 ** -3)
        assert e.popcount == 16 ** 3

    def test_dilated_solid_contains(self):
        solids = [Tube([0.1, -0.2, 0.05], np.array([1, 2, 3]) / math.sqrt(14), 2.0 ** -4),
                  Prism([0.0, 0.1, 0.0], Prism(np.zeros(3), np.eye(3), (1, 1, 1)).frame, (0.05, 0.2, 0.5))]
        for s in solids:
            assert rasterize(s, 2.0 ** -4).issubset(rasterize(dilate_solid(s, 2), 2.0 ** -4))

    def test_matches_cell_center_oracle(self):
        scale = 2.0 ** -3
        tube = Tube([0.05, 0.02, 0.0], np.array([1.0, 1.0, 1.0]) / math.sqrt(3), 0.2)
        prism = Prism([0.1, 0.0, -0.1], np.array([[0.6, 0.8, 0], [-0.8, 0.6, 0], [0, 0, 1]]), (0.1, 0.3, 0.5))
        c = cell_centers(scale)
        pts = np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1).reshape(-1, 3)
        p0, p1 = tube.endpoints
        axis = p1 - p0
        lam = np.clip((pts - p0) @ axis / axis.dot(axis), 0, 1)
        in_tube = np.linalg.norm(pts - p0 - lam[:, None] * axis, axis=1) <= tube.radius
        local = np.abs((pts - prism.center) @ prism.frame.T)
        in_prism = np.all(local <= np.array(prism.half_dims) + 1e-12, axis=1)
        npt.assert_array_equal(rasterize(tube, scale).occupancy.reshape(-1), in_tube)
        npt.assert_array_equal(rasterize(prism, scale).occupancy.reshape(-1), in_prism)

    def test_intersect_mode_is_superset(self, z_tube):
        center = rasterize(z_tube, 2.0 ** -4)
        grown = rasterize(z_tube, 2.0 ** -4, CellMembership.INTERSECT)
        assert center.issubset(grown)
        assert grown.popcount > center.popcount

    def test_clips_outside_domain(self):
        tube = Tube([0.9, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0 ** -3)
        e = rasterize(tube, 2.0 ** -3)
        assert e.popcount > 0
        assert np.all(e.occupied_centers()[:, 0] <= 1)

    def test_family_is_order_independent(self, rng):
        tubes = [Tube(rng.uniform(-0.3, 0.3, 3), [0, 0, 1], 2.0 ** -4) for _ in range(5)]
        a = rasterize_family(tubes, 2.0 ** -4)
        b = rasterize_family(tubes[::-1], 2.0 ** -4)
        assert a == b

    def test_ball_cells(self):
        flat = solid_cells(Ball(np.zeros(3), 2.0 ** -4), 2.0 ** -4)
        assert len(flat) == 8

class TestDilateSet:

    def test_single_cell(self):
        e = _single_cell(3, (5, 6, 7))
        assert dilate_set(e, 2.0 ** -3).popcount == 27

    def test_single_cell_clipped_at_corner(self):
        e = _single_cell(3, (0, 0, 0))
        assert dilate_set(e, 2.0 ** -3).popcount == 8

    def test_empty(self):
        e = VoxelSet.empty(2.0 ** -3)
        assert dilate_set(e, 0.5).popcount == 0

    def test_composition(self, rng):
        e = _random_set(rng, k=3, p=0.01)
        rho = 2.0 ** -3
        twice = dilate_set(dilate_set(e, rho), rho)
        assert twice == dilate_set(e, 2 * rho)

    def test_sub_grid(self):
        with pytest.raises(VoxelException, match="sub-grid dilation"):
            dilate_set(VoxelSet.empty(2.0 ** -3), 2.0 ** -4)

    def test_monotone(self, rng):
        e = _random_set(rng, k=3, p=0.01)
        f = e | _random_set(rng, k=3, p=0.01)
        assert dilate_set(e, 2.0 ** -3).issubset(dilate_set(f, 2.0 ** -2))

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_naive_oracle(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        e = _random_set(rng, k=4, p=0.002)
        cells = 1 + seed % 3
        expected = _naive_dilate(e.occupancy, cells)
        npt.assert_array_equal(dilate_set(e, cells * e.scale).occupancy, expected)

class TestCoveringNumber:

    def test_full_domain_unit_boxes(self):
        assert covering_number(VoxelSet.full(2.0 ** -3), 1.0) == 8

    def test_empty(self):
        assert covering_number(VoxelSet.empty(2.0 ** -3), 0.25) == 0

    def test_z_segment(self):
        delta = 2.0 ** -6
        tube = Tube([delta / 2, delta / 2, 0.0], [0, 0, 1], delta / 2)
        n = covering_number(rasterize(tube, delta), 2.0 ** -3)
        assert 8 <= n <= 10

    def test_non_dyadic(self):
        with pytest.raises(VoxelException):
            covering_number(VoxelSet.full(2.0 ** -3), 0.3)

    def test_monotone_and_subadditive(self, rng):
        e, f = _random_set(rng, p=0.005), _random_set(rng, p=0.005)
        profile = [n for _, n in covering_profile(e)]
        assert profile == sorted(profile, reverse=True)
        for rho in (2.0 ** -4, 2.0 ** -2):
            assert covering_number(e | f, rho) <= covering_number(e, rho) + covering_number(f, rho)

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_naive_oracle(self, seed):
        rng = np.random.Generator(np.random.PCG64(1000 + seed))
        e = _random_set(rng, k=4, p=0.001)
        b = 2 ** (seed % 4)
        assert covering_number(e, b * e.scale) == _naive_covering(e.occupancy, b)

class TestBallDensity:
    K = 5

    def test_full_domain(self):
        e = VoxelSet.full(2.0 ** -self.K)
        assert ball_density(e, np.zeros(3), 0.25, 2.0 ** -self.K) == pytest.approx(1.0)

    def test_empty(self):
        e = VoxelSet.empty(2.0 ** -self.K)
        assert ball_density(e, np.zeros(3), 0.25, 2.0 ** -self.K) == 0.0

    def test_single_cell_at_center(self):
        delta = 2.0 ** -self.K
        n = 2 ** (self.K + 1)
        e = _single_cell(self.K, (n // 2, n // 2, n // 2))
        center = e.occupied_centers()[0]
        expected = 27 / (4 / 3 * math.pi * 8 ** 3)
        assert ball_density(e, center, 8 * delta, delta) == pytest.approx(expected, rel=0.15)

    def test_radius_below_resolution(self):
        with pytest.raises(VoxelException):
            ball_density(VoxelSet.full(2.0 ** -3), np.zeros(3), 2.0 ** -5, 2.0 ** -5)

    def test_counts_agree_with_density(self, rng):
        e = _random_set(rng, k=4, p=0.01)
        centers = rng.uniform(-0.8, 0.8, size=(6, 3))
        for r in (2.0 ** -2, 2.0 ** -1 * 1.25):
            hits, totals = ball_counts(e, centers, r, 2.0 ** -4)
            for c, h, t in zip(centers, hits, totals):
                assert h / t == pytest.approx(ball_density(e, c, r, 2.0 ** -4))

class TestKvox:

    def test_header_layout(self, rng):
        e = _random_set(rng, k=3)
        data = kvox.encode(e)
        assert data[:4] == b"KVOX"
        assert data[5] == 3 and data[6] == 3
        assert len(data) == kvox.HEADER_SIZE + 16 ** 3 // 8

    def test_decode_restores_set(self, rng):
        e = _random_set(rng, k=3)
        assert kvox.decode(kvox.encode(e)) == e

    def test_two_dimensional(self):
        occ = np.zeros((64, 16), dtype=bool)
        occ[3, 4] = True
        e = VoxelSet(occ, 2.0 ** -3, (4, 1))
        back = kvox.decode(kvox.encode(e))
        assert back.half_extents == (4, 1)
        assert back == e

    def test_corrupted_payload(self, rng):
        data = bytearray(kvox.encode(_random_set(rng, k=3)))
        data[-1] ^= 0xFF
        with pytest.raises(VoxelException, match="checksum"):
            kvox.decode(bytes(data))

    def test_bad_magic(self, rng):
        data = bytearray(kvox.encode(_random_set(rng, k=3)))
        data[0:4] = b"XXXX"
        with pytest.raises(VoxelException, match="magic"):
            kvox.decode(bytes(data))
