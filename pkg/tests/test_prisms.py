"""Tests for prisms/: L2 overlap, spread fields, heavy rectangles,
clustering, the coarsening step and the four-way classification."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from geometry.solids import Tube, Prism
from geometry.containment import contained_in_convex, dilate_solid
from shading.family import ShadedFamily
from voxel.grid import solid_cells
from axioms.covers import build_partitioning_cover, CoverTree
from prisms.overlap import incidence_matrix, l2_overlap, l2_overlap_cells, cauchy_schwarz_chain, \
    union_volume_lower_bound, slab_union_floor
from prisms.spread import SpreadKind, spread_field, spread_bands
from prisms.heavy import detect_heavy, heavy_by_level, heavy_threshold
from prisms.cluster import Clustering, cluster_into_prisms, slab_prism, coverage_floor, \
    check_coverage
from prisms.coarsen import Branch, CoarsenConfig, coarsen_step, run_dichotomy, prism_dims
from prisms.fourway import FourWayConclusion, FourWayConfig, classify_four_way
from util.exceptions import PrismLabException, ContainmentException, DichotomyInconclusive

DELTA = 2.0 ** -5

IDENTITY = np.eye(3)
# normal y, plane spanned by -x and z
TURNED = np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 1.0]])
# normal z, plane spanned by x and y
FLAT = np.array([[0, 0, 1.0], [1.0, 0, 0], [0, 1.0, 0]])

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _tube(anchor=(0, 0, 0), direction=(0, 0, 1), radius=DELTA, length=1.0):
    d = np.asarray(direction, dtype=float)
    return Tube(np.asarray(anchor, dtype=float), d / np.linalg.norm(d), radius, length)

def _prism(center=(0, 0, 0), frame=IDENTITY, s=1 / 16, t=1 / 8, length=1.0):
    return Prism(np.asarray(center, dtype=float), frame, (s / 2, t / 2, length / 2))

def _full(solids, scale=DELTA):
    return ShadedFamily.full(solids, scale)

def _plane_fan():
    """25 tubes in the plane x = 0 from (0, a, -1/2) to (0, b, 1/2)"""
    ys = [-0.1875, -0.09375, 0.0, 0.09375, 0.1875]
    return [Tube.from_endpoints((0, a, -0.5), (0, b, 0.5), DELTA) for a in ys for b in ys]

def _parallel_row(n=5, spacing=3):
    """Tubes along z in the plane x = 0, spacing * delta apart"""
    return [_tube((0, spacing * DELTA * k, 0)) for k in range(-(n // 2), n // 2 + 1)]

# ===========================================================================

class TestOverlap:

    def test_incidence_matrix_rows(self):
        m = incidence_matrix([np.array([0, 2]), np.array([2, 3, 4])], 6)
        npt.assert_array_equal(m.toarray(), [[1, 0, 1, 0, 0, 0], [0, 0, 1, 1, 1, 0]])

    def test_l2_overlap_cells_counts_ordered_pairs(self):
        cells = [np.array([0, 1, 2]), np.array([2, 3])]
        # 3 + 2 on the diagonal, 1 twice off it
        assert l2_overlap_cells(cells, 5) == 7

    def test_disjoint_prisms_sum_volumes(self):
        a = _prism((-0.5, 0, 0))
        b = _prism((0.5, 0, 0))
        size = len(solid_cells(a, DELTA)) + len(solid_cells(b, DELTA))
        npt.assert_allclose(l2_overlap([a, b], DELTA), size * DELTA ** 3)

    def test_identical_pair_quadruples(self):
        a = _prism()
        size = len(solid_cells(a, DELTA))
        npt.assert_allclose(l2_overlap([a, a], DELTA), 4 * size * DELTA ** 3)

    def test_empty_family_raises(self):
        with pytest.raises(PrismLabException):
            l2_overlap([], DELTA)

    def test_cauchy_schwarz_chain_holds(self):
        f = _full([_prism(), _prism(frame=TURNED), _prism((0, 0.25, 0), frame=FLAT)])
        chain = cauchy_schwarz_chain(f)
        assert chain.first_stage
        assert chain.second_stage
        assert chain.holds
        assert chain.union_bound_cells <= chain.union
        assert chain.to_dict()["holds"] is True

    def test_chain_with_partial_shading(self):
        f = _full([_prism(), _prism((0, 0.0625, 0))])
        half = f.with_shadings([y[: len(y) // 2] for y in f.shadings])
        chain = cauchy_schwarz_chain(half)
        assert chain.shaded <= chain.incidence
        assert chain.holds

    def test_union_lower_bound_of_disjoint_family_is_exact(self):
        f = _full([_prism((-0.5, 0, 0)), _prism((0.5, 0, 0))])
        npt.assert_allclose(union_volume_lower_bound(f), f.union().popcount * DELTA ** 3)

    def test_slab_union_floor(self):
        npt.assert_allclose(slab_union_floor(1.0, 2.0 ** -4), 1 / 32)
        npt.assert_allclose(slab_union_floor(2.0, 2.0 ** -4, c=1.0), 1 / 32)


class TestSpread:

    def test_orthogonal_planes(self):
        a = _prism(s=1 / 8, t=1.0)
        b = _prism(frame=TURNED, s=1 / 8, t=1.0)
        f = _full([a, b])
        field = spread_field(f, SpreadKind.PLANE)
        common = np.intersect1d(f.cells[0], f.cells[1])
        assert len(common) > 0
        flat = field.values.reshape(-1)
        npt.assert_allclose(flat[common], math.pi / 2)
        rest = np.setdiff1d(np.union1d(f.cells[0], f.cells[1]), common)
        npt.assert_array_equal(flat[rest], 0)
        npt.assert_allclose(field.max, math.pi / 2)

    def test_single_prism_has_no_spread(self):
        field = spread_field(_full([_prism()]), SpreadKind.PLANE)
        assert field.max == 0
        npt.assert_allclose(field.threshold_meaningful, 0.5)

    def test_fan_of_tubes_line_spread(self):
        alpha = 0.5
        fan = [_tube(direction=(0, math.sin(a), math.cos(a))) for a in (0.0, alpha / 2, alpha)]
        field = spread_field(_full(fan), SpreadKind.LINE)
        npt.assert_allclose(field.max, alpha, rtol=1e-9)
        npt.assert_allclose(field.threshold_meaningful, 2 * DELTA)

    def test_plane_spread_rejects_tubes(self):
        with pytest.raises(PrismLabException):
            spread_field(_full([_tube()]), SpreadKind.PLANE)

    def test_shading_limits_incidence(self):
        f = _full([_prism(s=1 / 8, t=1.0), _prism(frame=TURNED, s=1 / 8, t=1.0)])
        common = np.intersect1d(f.cells[0], f.cells[1])
        f = f.with_shadings([np.setdiff1d(f.shadings[0], common), f.shadings[1]])
        assert spread_field(f, SpreadKind.PLANE).max == 0
        assert spread_field(f, SpreadKind.PLANE, use_shading=False).max > 0

    def test_bands_partition_cells(self):
        a = _prism(s=1 / 8, t=1.0)
        f = _full([a, _prism(frame=TURNED, s=1 / 8, t=1.0)])
        field = spread_field(f, SpreadKind.PLANE)
        cells = np.union1d(f.cells[0], f.cells[1])
        bands = spread_bands(field, cells, 0.1)
        npt.assert_allclose([theta for theta, _ in bands], [0.1, 0.2, 0.4, 0.8])
        total = np.sum([mask.astype(int) for _, mask in bands], axis=0)
        npt.assert_array_equal(total, 1)
        # pi/2 falls into the open-ended last band
        common = np.isin(cells, f.cells[0]) & np.isin(cells, f.cells[1])
        npt.assert_array_equal(bands[-1][1], common)

    def test_band_helpers(self):
        f = _full([_prism(s=1 / 8, t=1.0), _prism(frame=TURNED, s=1 / 8, t=1.0)])
        field = spread_field(f, SpreadKind.PLANE)
        cells = f.cells[0]
        assert len(field.band_of(cells, 1.0)) == len(np.intersect1d(f.cells[0], f.cells[1]))
        assert len(field.below(cells, 0.1)) + len(field.band_of(cells, 1.0)) == len(cells)


class TestHeavy:

    def test_threshold(self):
        npt.assert_allclose(heavy_threshold(DELTA, 0.25, 0.0), 8.0)
        npt.assert_allclose(heavy_threshold(DELTA, 0.25, 0.1), 8 * 2 ** 0.5)

    def test_plane_fan_is_heavy(self):
        scan = detect_heavy(_plane_fan(), 0.1)
        assert any(abs(r.rho - 0.25) < 1e-9 and r.count == 25 for r in scan.rectangles)
        assert all(r.count > r.threshold for r in scan.rectangles)
        assert scan.fraction == 1.0
        assert scan.mostly_heavy

    def test_heavy_rectangle_contains_its_members(self):
        tubes = _plane_fan()
        scan = detect_heavy(tubes, 0.1)
        rect = max(scan.rectangles, key=lambda r: r.count)
        for i in rect.members:
            assert contained_in_convex(tubes[i], rect.prism)
        assert set(rect.to_dict()) == {"prism", "rho", "count", "threshold"}

    def test_orthogonal_tubes_are_light(self):
        tubes = [_tube(direction=d) for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
        scan = detect_heavy(tubes, 0.1)
        assert scan.rectangles == []
        assert scan.fraction == 0.0

    def test_single_tube_is_light(self):
        assert detect_heavy([_tube()], 0.1).rectangles == []

    def test_heavy_by_level(self):
        tubes = _plane_fan()
        coarse = build_partitioning_cover(tubes, 0.5)
        tree = CoverTree.assemble([build_partitioning_cover(tubes, 0.25, coarse), coarse], tubes)
        scans = heavy_by_level(tree, 0.1)
        npt.assert_allclose([rho for rho, _ in scans], [level.rho for level in tree.levels if level.cover])
        for rho, scan in scans:
            assert scan.scale == rho


class TestCluster:

    HOST = Prism(np.zeros(3), IDENTITY, (DELTA, 0.25, 1.0))

    def test_parallel_row(self):
        f = _full(_parallel_row())
        clustering = cluster_into_prisms(f, self.HOST, 0.25)
        npt.assert_allclose(clustering.omega, 4 * DELTA)
        npt.assert_allclose(clustering.theta, DELTA)
        assert clustering.coverage == 1.0
        assert clustering.retained == 5
        assert clustering.coverage_floor == pytest.approx(1 / 12)
        assert len(clustering.prisms) == len(clustering.members) == len(clustering.fill)
        for p in clustering.prisms:
            npt.assert_allclose(p.dims, (2 * DELTA, 4 * DELTA, 1 + 2 * DELTA))
        assert all(0 < fill <= 1 for fill in clustering.fill)

    def test_too_few_tubes(self):
        f = _full(_parallel_row())
        with pytest.raises(PrismLabException, match="hypothesis violated"):
            cluster_into_prisms(f, self.HOST, 1.0)

    def test_coverage_floor(self):
        assert coverage_floor(2.0 ** -4) == pytest.approx(0.1)
        assert coverage_floor(DELTA) == pytest.approx(1 / 12)

    def test_coverage_below_floor_is_inconclusive(self):
        sparse = Clustering(4 * DELTA, DELTA, [], 0.05, retained=1, coverage_floor=coverage_floor(DELTA))
        with pytest.raises(DichotomyInconclusive) as info:
            check_coverage(sparse)
        assert info.value.trace[0]["coverage"] == 0.05
        assert info.value.trace[0]["step"] == "cluster"
        enough = Clustering(4 * DELTA, DELTA, [], 0.25, coverage_floor=coverage_floor(DELTA))
        assert check_coverage(enough) is enough

    def test_tube_outside_host(self):
        f = _full(_parallel_row() + [_tube((0.5, 0, 0))])
        with pytest.raises(ContainmentException):
            cluster_into_prisms(f, self.HOST, 0.1)

    def test_slab_prism_frame(self):
        tube = _tube((0, 0.1, 0), direction=(0.3, 0, 1))
        p = slab_prism(self.HOST, tube, 0.05)
        npt.assert_allclose(p.normal, (1, 0, 0))
        npt.assert_allclose(p.axis, (0, 0, 1))
        npt.assert_allclose(p.center, (0, 0.1, 0))
        npt.assert_allclose(p.half_dims, (DELTA, 0.1, tube.length / 2 + DELTA))


class TestCoarsen:

    def test_prism_dims(self):
        assert prism_dims([_prism(), _prism((0, 0.5, 0))]) == pytest.approx((1 / 16, 1 / 8, 1.0))
        with pytest.raises(PrismLabException, match="mixed"):
            prism_dims([_prism(), _prism(t=1 / 4)])
        with pytest.raises(PrismLabException):
            prism_dims([_tube()])

    def test_single_prism_widens(self):
        f = _full([_prism()])
        result = coarsen_step(f, 0.5)
        assert result.branch is Branch.B
        npt.assert_allclose((result.s, result.t), (0.5, 1.0))
        assert len(result.family) == 1
        wide = result.family.solids[0]
        npt.assert_allclose(wide.dims, (0.5, 1.0, 1.0))
        assert contained_in_convex(f.solids[0], wide)
        npt.assert_allclose(result.record["new_density"], 1.0)
        assert result.record["unit_zeta"] > 0.5

    def test_aligned_stack(self):
        stack = [_prism((0, y, 0)) for y in (-0.1875, -0.0625, 0.0625, 0.1875)]
        result = coarsen_step(_full(stack), 0.5)
        assert result.branch is Branch.B
        assert len(result.family) == 4
        for wide in result.family.solids:
            npt.assert_allclose(wide.dims, (0.5, 1.0, 1.0))
            for p in stack:
                assert contained_in_convex(p, dilate_solid(wide, 2))

    def test_coordinate_slabs_branch_a(self):
        slabs = [_prism(frame=frame, s=1 / 8, t=1.0) for frame in (IDENTITY, TURNED, FLAT)]
        result = coarsen_step(_full(slabs, 2.0 ** -4), 1.0)
        assert result.branch is Branch.A
        assert result.record["step"] == 1
        assert result.scan.zeta <= 1.0
        npt.assert_allclose(result.scan.r, 1.0)

    def test_hypothesis_violated(self):
        with pytest.raises(PrismLabException, match="hypothesis violated"):
            coarsen_step(_full([_prism(s=1 / 4, t=1 / 8)]), 0.5)
        f = _full([_prism()])
        with pytest.raises(PrismLabException, match="hypothesis violated"):
            coarsen_step(f.with_shadings([f.shadings[0][:0]]), 0.5)

    def test_config_fraction(self):
        npt.assert_allclose(CoarsenConfig().fraction(2.0 ** -5), 1 / 2500)
        npt.assert_allclose(CoarsenConfig(spread_fraction=0.1).fraction(2.0 ** -5), 0.1)
        assert CoarsenConfig().to_dict()["max_rounds"] == 8

    def test_run_dichotomy_reaches_full_width(self):
        records = []
        run = run_dichotomy(_full([_prism()]), 0.5, on_round=records.append)
        assert run.branch is Branch.B
        assert len(run.rounds) == 1
        assert records == run.rounds
        assert run.rounds[0]["round"] == 0
        npt.assert_allclose(run.family.solids[0].dims, (0.5, 1.0, 1.0))
        assert run.scan is not None

    def test_run_dichotomy_branch_a(self):
        slabs = [_prism(frame=frame, s=1 / 8, t=1.0) for frame in (IDENTITY, TURNED, FLAT)]
        run = run_dichotomy(_full(slabs, 2.0 ** -4), 1.0)
        assert run.branch is Branch.A
        assert run.certified


class TestFourWay:

    def test_single_tube(self):
        f = ShadedFamily.full([_tube(radius=2.0 ** -4)], 2.0 ** -4)
        result = classify_four_way(f, 0.5)
        assert result.conclusions == [FourWayConclusion.A]
        assert result.primary is FourWayConclusion.A
        assert result.evidence["family_size"] == 1
        assert result.to_dict()["primary"] == "A"

    def test_result_lists_conclusions_in_order(self):
        f = _full(_plane_fan())
        result = classify_four_way(f, 0.5, FourWayConfig(C=1e6))
        values = [c.value for c in result.conclusions]
        assert values == sorted(values)
        assert "beta" in result.evidence
        npt.assert_allclose(result.evidence["beta"], math.log(25) / math.log(32))
        assert set(result.evidence["heavy"]) == {"fraction", "rectangles"}
