"""Finite catalog of convex witnesses anchored at the solids of a family.

Every relevant convex set is comparable to an s x t x L box, so the catalog
is made of dyadic boxes and tubes placed around the solids themselves, plus
the domain box and the principal axes box of the whole family.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from geometry.solids import Tube, Prism, ConvexWitness, frame_from_axis, domain_box
from geometry.family import SolidArrays, line_metric_matrix, mean_axis
from geometry.containment import contained_mask

@dataclass
class CatalogConfig:
    """Knobs of the witness catalog.

    rotations: in-plane orientations of box witnesses per anchor
    max_anchors: anchors taken evenly from the family (None for every solid)
    tubes: include the tube ladder
    prisms: include dyadic s x t boxes
    global_boxes: include the domain box and the principal axes box
    recentre: add witnesses moved onto the mean of the solids they catch
    """
    rotations: int = 4
    max_anchors: int = None
    tubes: bool = True
    prisms: bool = True
    global_boxes: bool = True
    recentre: bool = True

@dataclass
class Candidate:
    """A catalog witness with the parameters it was built from"""
    witness: ConvexWitness
    rho: float = None           # radius of tube witnesses
    s: float = None             # box thickness
    t: float = None             # box width

def witness_key(witness: ConvexWitness):
    """Canonical encoding of a witness, the tie-break order of scans"""
    return json.dumps(witness.to_dict(), sort_keys=True)

def anchor_indices(n, max_anchors):
    if max_anchors is None or n <= max_anchors:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_anchors).round().astype(int))

def _bounding_radius(shape):
    if isinstance(shape, Tube):
        return shape.length / 2 + shape.radius
    if isinstance(shape, Prism):
        return float(np.linalg.norm(shape.half_dims))
    return shape.radius

def principal_box(arrays: SolidArrays, label="principal-axes"):
    """Box aligned with the principal axes of all support points that
    contains the whole family."""
    pts = arrays.points.reshape(-1, 3)
    inflate = np.repeat(arrays.inflate, arrays.points.shape[1])
    centered = pts - pts.mean(axis=0)
    _, vecs = np.linalg.eigh(centered.T @ centered)
    # eigh sorts ascending: thinnest direction first
    frame = vecs.T.copy()
    if np.linalg.det(frame) < 0:
        frame[0] *= -1
    proj = pts @ frame.T
    lo = (proj - inflate[:, None]).min(axis=0)
    hi = (proj + inflate[:, None]).max(axis=0)
    half = np.maximum((hi - lo) / 2, 1e-9)
    center = ((hi + lo) / 2) @ frame
    return ConvexWitness(Prism(center, frame, tuple(half * (1 + 1e-9))), label)

class WitnessScanner:
    """Enumerates the catalog for one family and counts the solids each
    witness contains"""

    def __init__(self, solids, config=None):
        self.arrays = solids if isinstance(solids, SolidArrays) else SolidArrays(solids)
        self.config = config if config is not None else CatalogConfig()
        self.centers = self.arrays.centers
        self.tree = cKDTree(self.centers)
        self.n = len(self.arrays)
        self.is_tubes = self.arrays.is_tubes
        solids = self.arrays.solids
        if self.is_tubes:
            self.lengths = np.array([t.length for t in solids])
            self.thin = np.array([t.radius for t in solids])
        else:
            self.lengths = np.array([2 * p.half_dims[2] for p in solids])
            self.thin = np.array([p.half_dims[0] for p in solids])

    def members(self, witness: ConvexWitness):
        """Indices of the solids contained in witness"""
        shape = witness.shape
        idx = self.tree.query_ball_point(shape.center, _bounding_radius(shape) * (1 + 1e-9))
        if not idx:
            return np.empty(0, dtype=int)
        idx = np.sort(np.asarray(idx, dtype=int))
        return idx[contained_mask(self.arrays, witness, idx)]

    def candidate_count(self, witness: ConvexWitness):
        shape = witness.shape
        return len(self.tree.query_ball_point(shape.center, _bounding_radius(shape) * (1 + 1e-9)))

    # -- catalog ------------------------------------------------------------

    def global_witnesses(self):
        yield Candidate(ConvexWitness(domain_box(), "domain"), s=2.0, t=2.0)
        box = principal_box(self.arrays)
        yield Candidate(box, s=2 * box.shape.half_dims[0], t=2 * box.shape.half_dims[1])

    def tube_ladder(self, i, max_radius=2.0):
        anchor = self.arrays.solids[i]
        radius = anchor.radius
        length = self.lengths.max()
        while radius <= max_radius * (1 + 1e-9):
            yield Candidate(ConvexWitness(Tube(anchor.anchor, anchor.direction, radius, length),
                                          f"tube:{i}"), rho=radius)
            if self.config.recentre:
                recentred = self._recentred_tube(i, radius, length)
                if recentred is not None:
                    yield recentred
            radius *= 2

    def _recentred_tube(self, i, radius, length):
        anchor = self.arrays.solids[i]
        near = self.tree.query_ball_point(anchor.anchor, 2 * radius * (1 + 1e-9))
        near = np.asarray(near, dtype=int)
        a = self.arrays
        dist = line_metric_matrix(a.p0[[i]], a.p1[[i]], a.p0[near], a.p1[near])[0]
        near = near[dist <= 2 * radius]
        if len(near) < 2:
            return None
        center, direction, _ = mean_axis([a.solids[j] for j in near])
        if np.allclose(center, anchor.anchor) and abs(abs(np.dot(direction, anchor.direction)) - 1) < 1e-12:
            return None
        return Candidate(ConvexWitness(Tube(center, direction, radius, length), f"tube*:{i}"), rho=radius)

    def frames(self, i, t):
        """Orientations of box witnesses around anchor i at width t"""
        solid = self.arrays.solids[i]
        if self.is_tubes:
            base = frame_from_axis(solid.direction)
        else:
            base = solid.frame
        w = base[2]
        n = max(self.config.rotations, 1)
        for k in range(n):
            a = math.pi * k / n
            u = math.cos(a) * base[0] + math.sin(a) * base[1]
            yield np.stack([u, np.cross(w, u), w])
        normal = self._pca_normal(i, t, base)
        if normal is not None:
            yield np.stack([normal, np.cross(w, normal), w])

    def _pca_normal(self, i, t, base):
        near = self.tree.query_ball_point(self.centers[i], t)
        if len(near) < 3:
            return None
        pts = self.arrays.points[near].reshape(-1, 3) - self.centers[i]
        plane = np.stack([pts @ base[0], pts @ base[1]], axis=1)
        plane = plane - plane.mean(axis=0)
        _, vecs = np.linalg.eigh(plane.T @ plane)
        a, b = vecs[:, 0]
        normal = a * base[0] + b * base[1]
        return normal / np.linalg.norm(normal)

    def box_ladder(self, i, s_min=None, t_min=None, s_max=2.0, fixed_length=None):
        solid = self.arrays.solids[i]
        center = self.centers[i]
        s = 2 * self.thin[i] if s_min is None else s_min
        anchor_t = s if self.is_tubes else solid.t
        while s <= s_max * (1 + 1e-9):
            t = max(s, anchor_t if t_min is None else t_min)
            while t <= 2.0 * (1 + 1e-9):
                length = fixed_length or max(self.lengths[i] + s, t)
                half = (s / 2, t / 2, length / 2)
                for frame in self.frames(i, t):
                    box = ConvexWitness(Prism(center, frame, half), f"box:{i}")
                    yield Candidate(box, s=s, t=t)
                    if self.config.recentre:
                        inside = self.members(box)
                        if len(inside) > 1:
                            moved = self.centers[inside].mean(axis=0)
                            if not np.allclose(moved, center):
                                yield Candidate(ConvexWitness(Prism(moved, frame, half), f"box*:{i}"),
                                                s=s, t=t)
                t *= 2
            s *= 2

    def own_witness(self, i):
        """The solid itself, as the smallest witness holding it"""
        solid = self.arrays.solids[i]
        if self.is_tubes:
            return Candidate(ConvexWitness(solid, f"self:{i}"), rho=solid.radius)
        return Candidate(ConvexWitness(solid, f"self:{i}"), s=solid.s, t=solid.t)

    def catalog(self):
        """Every witness in scan order"""
        if self.config.global_boxes:
            yield from self.global_witnesses()
        for i in anchor_indices(self.n, self.config.max_anchors):
            yield self.own_witness(i)
            if self.config.tubes and self.is_tubes:
                yield from self.tube_ladder(i)
            if self.config.prisms:
                yield from self.box_ladder(i)

    def scan(self, normalizer, candidates=None):
        """Maximize count(W) / normalizer(candidate) over the catalog.

        :normalizer: function of a Candidate returning a positive number, or
            None to skip the candidate
        :candidates: iterable of Candidate (default: the full catalog)
        :returns: (best value, best Candidate, its member indices); ties go to
            the witness with the smallest witness_key, whatever the scan order

        """
        best_value, best, best_members = -1.0, None, None
        scanned = 0
        for cand in (self.catalog() if candidates is None else candidates):
            norm = normalizer(cand)
            if norm is None or norm <= 0:
                continue
            scanned += 1
            if self.candidate_count(cand.witness) / norm < best_value:
                continue
            inside = self.members(cand.witness)
            value = len(inside) / norm
            if value > best_value or (value == best_value
                                      and witness_key(cand.witness) < witness_key(best.witness)):
                best_value, best, best_members = value, cand, inside
        logger.debug(f"scanned {scanned} witnesses over {self.n} solids, best {best_value:.4g}")
        return best_value, best, best_members
