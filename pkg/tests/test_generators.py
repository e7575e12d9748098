"""Tests for generators/: every generator is audited by the checkers of
axioms/, prisms/ and projection/."""

import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from geometry.containment import contained_in_convex
from voxel.grid import rasterize_family
from axioms.catalog import CatalogConfig
from axioms.checks import convex_wolff_error, essential_distinctness_violation, cardinality_lower_bound
from axioms.covers import check_self_similar, check_every_scale, family_sigma
from prisms.heavy import detect_heavy
from projection.points import ParamPointSet, NonConcentration, nonconcentration_error
from generators.tubes import gen_direction_separated, gen_coplanar, gen_sticky, gen_random_lines, \
    hemisphere_net, sticky_depth, ANCHOR_RADIUS
from generators.prisms import gen_prism_clustered, host_lattice, host_count
from generators.points import gen_tiled_pointset
from generators.spec import GeneratorKind, GeneratorSpec, generate, GENERATORS
from util.exceptions import GeneratorException

DELTA = 2.0 ** -4

FAST = CatalogConfig(max_anchors=16)

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _min_line_angle(directions):
    d = np.asarray(directions)
    cos = np.abs(d @ d.T)
    np.fill_diagonal(cos, 0.0)
    return math.acos(min(1.0, cos.max()))

def _serialized(generated):
    return json.dumps(generated.to_dict(), sort_keys=True)

# ===========================================================================

class TestDirectionSeparated:

    def test_net_separation(self):
        for k in (4, 5, 6):
            delta = 2.0 ** -k
            assert _min_line_angle(hemisphere_net(delta)) >= delta

    def test_cardinality(self):
        tubes = gen_direction_separated(DELTA, 1)
        assert DELTA ** -2 / 8 <= len(tubes) <= 8 * DELTA ** -2

    def test_anchors_and_distinctness(self):
        tubes = gen_direction_separated(DELTA, 1)
        assert max(np.linalg.norm(t.anchor) for t in tubes) <= ANCHOR_RADIUS
        assert essential_distinctness_violation(tubes) is None
        assert all(t.radius == DELTA and t.length == 1.0 for t in tubes)

    def test_convex_wolff(self):
        tubes = gen_direction_separated(DELTA, 2)
        report = convex_wolff_error(tubes, config=FAST)
        assert report.passed
        assert report.error_constant <= 100
        assert len(tubes) >= cardinality_lower_bound(tubes, report.error_constant)

    def test_same_seed_same_family(self):
        a = generate(GeneratorSpec(GeneratorKind.DIRECTION_SEPARATED, DELTA, 5))
        b = generate(GeneratorSpec(GeneratorKind.DIRECTION_SEPARATED, DELTA, 5))
        c = generate(GeneratorSpec(GeneratorKind.DIRECTION_SEPARATED, DELTA, 6))
        assert _serialized(a) == _serialized(b)
        assert _serialized(a) != _serialized(c)


class TestCoplanar:

    def test_axes_in_plane(self):
        tubes = gen_coplanar(DELTA)
        assert all(t.anchor[1] == 0.0 and t.direction[1] == 0.0 for t in tubes)
        assert essential_distinctness_violation(tubes) is None
        assert DELTA ** -2 / 8 <= len(tubes) <= 8 * DELTA ** -2

    def test_union_inside_slab(self):
        tubes = gen_coplanar(DELTA)
        assert rasterize_family(tubes, DELTA).volume <= 8 * DELTA

    def test_slab_concentrates(self):
        report = convex_wolff_error(gen_coplanar(DELTA), 0.5, FAST)
        assert report.error_constant >= 1 / (16 * DELTA)
        assert not report.passed


class TestSticky:

    def test_bucket_sizes(self):
        family = gen_sticky(0.04, 5, 0)
        assert len(family.tubes) == 625
        assert family.scale == pytest.approx(0.04)
        assert family.depth == 2
        for i, level in enumerate(family.tree.levels):
            assert level.rho == pytest.approx(5.0 ** -i)
            assert {len(b) for b in level.buckets} == {5 ** (2 * (2 - i))}
        assert family.tree.nested
        assert family_sigma(len(family.tubes), family.scale) == pytest.approx(2.0, abs=0.05)

    def test_snaps_scale(self):
        assert sticky_depth(0.03, 5) == 2
        assert gen_sticky(0.03, 5, 0).scale == pytest.approx(0.04)
        with pytest.raises(GeneratorException):
            sticky_depth(0.1, 1)

    def test_cover_tubes_hold_their_buckets(self):
        family = gen_sticky(DELTA, 2, 3)
        for level in family.tree.levels:
            for tube, bucket in zip(level.cover, level.buckets):
                assert all(contained_in_convex(family.tubes[j], tube) for j in bucket)
        npt.assert_array_equal(family.tree.levels[1].parents, [0] * 4)

    def test_distinct_and_inside_domain(self):
        family = gen_sticky(DELTA, 2, 3)
        assert essential_distinctness_violation(family.tubes) is None
        for t in family.tubes:
            for end in t.endpoints:
                assert np.all(np.abs(end) + t.radius <= 1)

    @pytest.mark.slow
    def test_axiom_chain(self):
        tubes = gen_sticky(DELTA, 2, 3).tubes
        similar, _ = check_self_similar(tubes, 64, config=FAST)
        every, _ = check_every_scale(tubes, 64, config=FAST)
        assert similar.passed
        assert every.passed
        assert convex_wolff_error(tubes, config=FAST).error_constant <= 64


class TestRandomLines:

    def test_count_and_distinctness(self):
        tubes = gen_random_lines(DELTA, 40, 9)
        assert len(tubes) == 40
        assert essential_distinctness_violation(tubes) is None
        assert max(np.linalg.norm(t.anchor) for t in tubes) <= ANCHOR_RADIUS

    def test_needs_a_tube(self):
        with pytest.raises(GeneratorException):
            gen_random_lines(DELTA, 0, 9)


class TestPrismClustered:

    def test_host_lattice(self):
        lattice = host_lattice(DELTA, DELTA, 0.25)
        assert len(lattice) == 13
        npt.assert_array_equal(lattice[0], 0.0)
        assert np.all(lattice[:, 0] == 0.0) and np.all(lattice[:, 2] == 0.0)

    def test_tubes_inside_hosts(self):
        cluster = gen_prism_clustered(DELTA, DELTA, 0.25, 8, 3)
        assert len(cluster.hosts) == host_count(DELTA, 0.25) == 16
        assert len(cluster.tubes) == 16 * 8
        for tube, k in zip(cluster.tubes, cluster.host_of):
            assert contained_in_convex(tube, cluster.hosts[k])
        assert essential_distinctness_violation(cluster.tubes) is None

    def test_host_convex_wolff(self):
        cluster = gen_prism_clustered(DELTA, DELTA, 0.25, 8, 3)
        assert cluster.cwa <= 4
        assert convex_wolff_error(cluster.hosts).error_constant == pytest.approx(cluster.cwa)

    def test_hosts_are_heavy(self):
        cluster = gen_prism_clustered(DELTA, DELTA, 0.25, 8, 3)
        first = [t for t, k in zip(cluster.tubes, cluster.host_of) if k == 0]
        scan = detect_heavy(first, 0.1)
        assert scan.rectangles
        assert max(r.count for r in scan.rectangles) == 8

    def test_budget(self):
        with pytest.raises(GeneratorException, match="could not meet CWA budget"):
            gen_prism_clustered(DELTA, DELTA, 0.25, 8, 3, budget=1e-3, max_tries=2)

    def test_host_too_small(self):
        with pytest.raises(GeneratorException):
            gen_prism_clustered(DELTA, DELTA, 0.25, 50, 3)
        with pytest.raises(GeneratorException):
            gen_prism_clustered(DELTA, 0.5, 0.25, 8, 3)


class TestTiledPointSet:

    def test_single_point_gives_lattice(self):
        delta = 2.0 ** -6
        base = ParamPointSet([[0.3, 0.7]], delta)
        out = gen_tiled_pointset(base, 1.0, delta)
        assert out.covering_number() == 64
        npt.assert_allclose(np.unique(out.points[:, 0]), (8 * np.arange(8) + 0.5) * delta)
        assert out.covering_number() >= delta ** -1 / 8
        assert nonconcentration_error(out, 1.0, NonConcentration.KATZ_TAO) <= 8

    def test_grid_block_fills_the_line(self):
        delta = 2.0 ** -6
        base = ParamPointSet((np.arange(8) + 0.5) * delta, delta)
        out = gen_tiled_pointset(base, 1.0, 2.0 ** -3)
        npt.assert_allclose(np.sort(out.points[:, 0]), (np.arange(64) + 0.5) * delta)
        base_c = nonconcentration_error(base, 1.0, NonConcentration.KATZ_TAO)
        assert nonconcentration_error(out, 1.0, NonConcentration.KATZ_TAO) <= 8 * base_c

    def test_half_dimensional_line(self):
        delta = 2.0 ** -6
        out = gen_tiled_pointset(ParamPointSet([0.01], delta), 0.5, delta)
        assert out.covering_number() == 8
        assert out.covering_number() >= delta ** -0.5 / 8
        assert nonconcentration_error(out, 0.5, NonConcentration.KATZ_TAO) <= 8

    def test_preconditions(self):
        delta = 2.0 ** -6
        with pytest.raises(GeneratorException, match="one cube"):
            gen_tiled_pointset(ParamPointSet([0.1, 0.2], delta), 1.0, 2.0 ** -4)
        with pytest.raises(GeneratorException, match="fewer than"):
            gen_tiled_pointset(ParamPointSet([0.1], delta), 1.0, 2.0 ** -2)
        with pytest.raises(GeneratorException):
            gen_tiled_pointset(ParamPointSet([0.1], delta), 2.0, delta)


class TestGeneratorSpec:

    def test_dict(self):
        spec = GeneratorSpec(GeneratorKind.STICKY, 0.04, 7, {"branching": 5})
        data = json.loads(json.dumps(spec.to_dict()))
        assert data["kind"] == "sticky"
        assert GeneratorSpec.from_dict(data) == spec

    def test_kind_from_string(self):
        assert GeneratorSpec("coplanar", DELTA).kind is GeneratorKind.COPLANAR
        with pytest.raises(GeneratorException, match="unknown generator kind"):
            GeneratorSpec("spiral", DELTA)
        with pytest.raises(GeneratorException):
            GeneratorSpec.from_dict({"kind": "coplanar"})

    def test_random_lines_determinism(self):
        spec = GeneratorSpec(GeneratorKind.RANDOM_LINES, DELTA, 11, {"count": 20})
        assert _serialized(generate(spec)) == _serialized(generate(GeneratorSpec.from_dict(spec.to_dict())))
        assert len(generate(spec).tubes) == 20

    def test_every_kind_dispatches(self):
        assert set(GENERATORS) == set(GeneratorKind)

    def test_sticky_output_carries_tree(self):
        out = generate(GeneratorSpec(GeneratorKind.STICKY, 2.0 ** -2, 0, {"branching": 2}))
        data = out.to_dict()
        assert [level["rho"] for level in data["tree"]] == [1.0, 0.5, 0.25]
        assert len(data["solids"]) == 16

    def test_tiled_pointset_spec(self):
        delta = 2.0 ** -6
        spec = GeneratorSpec(GeneratorKind.TILED_POINTSET, delta, 0,
                             {"base": [[0.3, 0.7]], "s": 1.0, "rho": delta})
        out = generate(spec)
        assert out.tubes is None
        assert out.points.covering_number() == 64
        with pytest.raises(GeneratorException, match="base"):
            generate(GeneratorSpec(GeneratorKind.TILED_POINTSET, delta, 0, {"s": 1.0}))
