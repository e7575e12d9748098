"""Partitioning covers, cover trees and the multi-scale axioms.

A partitioning cover of a tube family at scale rho is a set of rho-tubes A,
each with a bucket of member tubes inside it, such that the sets of tubes
inside the 2-dilates 2A are pairwise disjoint. Covers are built greedily and
their uniformity (largest over smallest bucket) is measured. Covers chosen
for the multi-scale axioms are nested: each bucket lies in one bucket of the
next coarser cover.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from geometry.solids import Tube
from geometry.family import family_scale, line_metric_matrix, mean_axis
from geometry.containment import contained_mask, contained_in_convex, dilate_solid
from geometry.rescale import unit_rescale
from axioms.report import Axiom, AxiomReport
from axioms.checks import convex_wolff_error, check_essentially_distinct, tube_family
from util.dyadic import dyadic_scales
from util.exceptions import AxiomException

@dataclass
class PartitioningCover:
    """Greedy partitioning cover at scale rho.

    assignment[i] is the cover index of tube i, or -1 when the tube could
    not be covered without breaking the partitioning property.
    """
    rho: float
    cover: list
    assignment: np.ndarray
    buckets: list

    @property
    def coverage(self):
        return float(np.mean(self.assignment >= 0))

    @property
    def sizes(self):
        return np.array([len(b) for b in self.buckets], dtype=int)

    @property
    def uniformity(self):
        sizes = self.sizes
        if len(sizes) == 0:
            return math.inf
        return float(sizes.max() / sizes.min())

def build_partitioning_cover(solids, rho, parent=None):
    """Greedy partitioning cover of a tube family by rho-tubes.

    Seeds are taken in index order among unassigned tubes. Each seed grows
    a rho-tube on the mean axis of its unassigned neighbours (line metric at
    most 2 rho), or on its own axis when that tube misses the seed. The
    candidate is accepted when the tubes inside its 2-dilate were not
    claimed by an earlier 2-dilate; otherwise the seed stays uncovered.
    Given a parent cover, neighbours and buckets come from the parent bucket
    of the seed only, so every bucket lies inside one parent bucket.

    :solids: list of Tube
    :rho: cover scale, delta <= rho
    :parent: coarser PartitioningCover of the same family, or None
    :returns: PartitioningCover
    :raises AxiomException: for rho < delta

    """
    arrays = tube_family(solids, "a partitioning cover")
    delta = family_scale(arrays.solids)
    if rho < delta * (1 - 1e-9):
        raise AxiomException(f"cover scale {rho} below delta {delta}")
    n = len(arrays)
    length = max(t.length for t in arrays.solids)
    p0, p1 = arrays.p0, arrays.p1
    if parent is not None and len(parent.assignment) != n:
        raise AxiomException("parent cover belongs to another family")
    group = np.zeros(n, dtype=int) if parent is None else parent.assignment
    assignment = np.full(n, -1, dtype=int)
    skipped = np.zeros(n, dtype=bool)
    claimed = np.zeros(n, dtype=bool)
    cover, buckets = [], []
    for seed in range(n):
        if assignment[seed] >= 0 or skipped[seed] or group[seed] < 0:
            continue
        open_ = np.flatnonzero((assignment < 0) & (group == group[seed]))
        dist = line_metric_matrix(p0[[seed]], p1[[seed]], p0[open_], p1[open_])[0]
        near = open_[dist <= 2 * rho * (1 + 1e-9)]
        center, direction, _ = mean_axis([arrays.solids[j] for j in near])
        tube = arrays.solids[seed]
        candidate = Tube(center, direction, rho, length, delta)
        if not contained_in_convex(tube, candidate):
            candidate = Tube(tube.anchor, tube.direction, rho, length, delta)
        double = contained_mask(arrays, dilate_solid(candidate, 2))
        if (double & claimed).any():
            skipped[seed] = True
            continue
        inside = contained_mask(arrays, candidate, open_)
        bucket = open_[inside]
        claimed |= double
        assignment[bucket] = len(cover)
        cover.append(candidate)
        buckets.append(bucket)
    result = PartitioningCover(rho, cover, assignment, buckets)
    logger.debug(f"cover at rho={rho:g}: {len(cover)} tubes, coverage {result.coverage:.3f}, "
                 f"K={result.uniformity:g}")
    return result

@dataclass
class EveryScaleThresholds:
    """The three roles of the every-scale error C, each defaulting to C.

    window: search rho in [rho0, window rho0]
    uniform: largest allowed bucket size ratio
    cwa: largest allowed convex Wolff error of a rescaled bucket
    """
    window: float
    uniform: float
    cwa: float

    @staticmethod
    def common(C):
        return EveryScaleThresholds(C, C, C)

@dataclass
class CoverLevel:
    rho: float
    cover: list
    buckets: list
    parents: np.ndarray = None  # cover index one level up, -1 at the root level

@dataclass
class CoverTree:
    """Covers chosen by the every-scale check, coarsest level first. The
    leaves are the input tubes themselves."""
    levels: list = field(default_factory=list)
    leaves: list = field(default_factory=list)

    @property
    def scales(self):
        return [level.rho for level in self.levels]

    @property
    def nested(self):
        """Every bucket lies inside a single bucket of the level above"""
        for upper, lower in zip(self.levels, self.levels[1:]):
            owner = np.full(len(self.leaves), -1, dtype=int)
            for k, bucket in enumerate(upper.buckets):
                owner[bucket] = k
            for bucket in lower.buckets:
                if len(np.unique(owner[bucket])) > 1:
                    return False
        return True

    @staticmethod
    def assemble(covers, leaves):
        """CoverTree of nested covers, coarsest first.

        :raises AxiomException: when a bucket is not inside exactly one
            bucket of the next coarser cover
        """
        levels = [CoverLevel(c.rho, c.cover, c.buckets)
                  for c in sorted(covers, key=lambda c: -c.rho)]
        for k, level in enumerate(levels):
            if k == 0:
                level.parents = np.full(len(level.cover), -1, dtype=int)
                continue
            owner = np.full(len(leaves), -1, dtype=int)
            for j, bucket in enumerate(levels[k - 1].buckets):
                owner[bucket] = j
            parents = []
            for bucket in level.buckets:
                owners = np.unique(owner[bucket])
                if len(owners) != 1 or owners[0] < 0:
                    raise AxiomException(f"cover at rho={level.rho:g} is not nested in the cover "
                                         f"at rho={levels[k - 1].rho:g}")
                parents.append(int(owners[0]))
            level.parents = np.array(parents, dtype=int)
        return CoverTree(levels, list(leaves))

def rescaled_bucket_error(arrays, partition, config=None):
    """Largest convex Wolff error over the unit rescalings of the buckets,
    with the index of the worst bucket"""
    worst, where = 0.0, -1
    for k, (tube, bucket) in enumerate(zip(partition.cover, partition.buckets)):
        rescaled, _ = unit_rescale([arrays.solids[j] for j in bucket], tube)
        value = convex_wolff_error(rescaled, config=config).error_constant
        if value > worst:
            worst, where = value, k
    return worst, where

def _candidate_scales(rho0, window):
    top = min(window * rho0, 1.0)
    scales = {rho0}
    scales.update(s for s in dyadic_scales(rho0, top) if s >= rho0 * (1 - 1e-12))
    return sorted(scales)

class _ScaleEvaluator:
    """Memoized cover evaluation per (rho, parent cover)"""

    def __init__(self, arrays, thresholds, C, config, extra):
        self.arrays = arrays
        self.thresholds = thresholds
        self.C = C
        self.config = config
        self.extra = extra
        self.cache = {}

    def __call__(self, rho, parent=None):
        key = (round(rho, 12), None if parent is None else id(parent))
        if key not in self.cache:
            self.cache[key] = self._evaluate(rho, parent)
        return self.cache[key]

    def _evaluate(self, rho, parent):
        partition = build_partitioning_cover(self.arrays, rho, parent)
        entry = {"rho": rho, "partition": partition, "coverage": partition.coverage,
                 "uniformity": partition.uniformity, "cwa": math.inf, "extra": None,
                 "value": math.inf}
        if partition.coverage < 1:
            return entry
        cwa, worst = rescaled_bucket_error(self.arrays, partition, self.config)
        entry["cwa"] = cwa
        entry["worst_bucket"] = worst
        t = self.thresholds
        value = max(partition.uniformity * self.C / t.uniform, cwa * self.C / t.cwa)
        if self.extra is not None:
            entry["extra"] = self.extra(partition)
            value = max(value, entry["extra"])
        entry["value"] = value
        return entry

def _every_scale(solids, C, thresholds, config, extra, axiom, sigma=None):
    arrays = tube_family(solids, "the every-scale axiom")
    check_essentially_distinct(arrays)
    delta = family_scale(arrays.solids)
    thresholds = thresholds or EveryScaleThresholds.common(C)
    evaluate = _ScaleEvaluator(arrays, thresholds, C, config, extra)
    starts = []
    rho0 = delta
    while rho0 <= 1.0 * (1 + 1e-9):
        starts.append(rho0)
        rho0 *= 2
    # coarse to fine: each cover is built inside the last chosen coarser one
    per_scale, chosen = [], []
    parent = None
    for rho0 in reversed(starts):
        entries = []
        for rho in _candidate_scales(rho0, thresholds.window):
            if parent is None:
                entries.append(evaluate(rho))
            elif math.isclose(rho, parent["rho"], rel_tol=1e-12):
                entries.append(parent)
            elif rho < parent["rho"]:
                entries.append(evaluate(rho, parent["partition"]))
        best = min(entries, key=lambda e: e["value"])
        per_scale.append({"rho0": rho0, "rho": best["rho"], "value": best["value"],
                          "uniformity": best["uniformity"], "cwa": best["cwa"],
                          "coverage": best["coverage"], "extra": best["extra"]})
        if math.isfinite(best["value"]):
            chosen.append(best["partition"])
            parent = best
    per_scale.reverse()
    worst = (-1.0, None)
    for entry in per_scale:
        if entry["value"] > worst[0]:
            worst = (entry["value"], entry["rho0"])
    unique = {round(p.rho, 12): p for p in chosen}
    tree = CoverTree.assemble(unique.values(), arrays.solids)
    report = AxiomReport(axiom, worst[0], worst[1], C, sigma=sigma,
                         details={"per_scale": per_scale,
                                  "thresholds": {"window": thresholds.window,
                                                 "uniform": thresholds.uniform,
                                                 "cwa": thresholds.cwa},
                                  "cover_scales": tree.scales,
                                  "nested": tree.nested})
    return report, tree

def check_every_scale(solids, C, thresholds=None, config=None):
    """Convex Wolff axioms at every scale with error C.

    For each dyadic rho0 from delta to 1 the check looks for a cover scale
    rho in [rho0, C rho0] whose partitioning cover covers every tube, is
    C-uniform and whose rescaled buckets satisfy the convex Wolff axioms
    with error C. The error constant is the worst over rho0 of the best
    such rho; an uncoverable rho0 makes it infinite. Scales are settled from
    the coarsest rho0 down and every cover is built inside the last chosen
    coarser one (no coarser than it), so the returned CoverTree is nested.

    :returns: (AxiomReport with the worst scale as witness, CoverTree)
    :raises EssentialDistinctnessException: as for the Frostman check

    """
    return _every_scale(solids, C, thresholds, config, None, Axiom.EVERY_SCALE)

def family_sigma(n, delta):
    """sigma with n = delta^-sigma"""
    if n <= 1:
        raise AxiomException("degenerate sigma")
    return math.log(n) / math.log(1 / delta)

def bucket_size_error(partition, sigma, delta):
    """How far bucket sizes stray from (rho/delta)^sigma, as a factor >= 1"""
    target = (partition.rho / delta) ** sigma
    sizes = partition.sizes
    return float(max((sizes / target).max(), (target / sizes).max()))

def check_self_similar(solids, C, thresholds=None, config=None):
    """Self-similar convex Wolff axioms: the every-scale check where every
    bucket size must also lie within a factor C of (rho/delta)^sigma,
    sigma being defined by #f = delta^-sigma.

    :returns: (AxiomReport, CoverTree)
    :raises AxiomException: "degenerate sigma" for a single tube

    """
    arrays = tube_family(solids, "the self-similar axiom")
    delta = family_scale(arrays.solids)
    sigma = family_sigma(len(arrays), delta)
    report, tree = _every_scale(arrays, C, thresholds, config,
                                lambda p: bucket_size_error(p, sigma, delta),
                                Axiom.SELF_SIMILAR, sigma)
    return report, tree
