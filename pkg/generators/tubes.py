"""Tube family generators.

All generators emit tubes of radius delta and length 1 inside [-1,1]^3
and return essentially distinct families; collisions are removed by
re-sampling the later tube of the offending pair from the same seeded
generator.
"""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from geometry.solids import Tube
from axioms.checks import essential_distinctness_violation
from axioms.covers import CoverLevel, CoverTree
from util.rng import make_rng
from util.exceptions import GeneratorException

# Direction net spacing in units of delta: about delta^-2 directions on the hemisphere
NET_SPACING = math.sqrt(2 * math.pi)
ANCHOR_RADIUS = 0.25
# Leaf spacing of plane fans and sticky families, in units of delta
ANGLE_STEP = 2.5
OFFSET_STEP = 1.5

MAX_RESAMPLES = 10000

def resolve_distinct(tubes, resample, max_tries=MAX_RESAMPLES):
    """Replace tubes until no pair violates essential distinctness.

    :tubes: list of Tube
    :resample: callable i -> new Tube for position i
    :raises GeneratorException: when max_tries replacements do not suffice

    """
    tubes = list(tubes)
    for tries in range(max_tries):
        pair = essential_distinctness_violation(tubes)
        if pair is None:
            if tries:
                logger.debug(f"re-sampled {tries} tubes for essential distinctness")
            return tubes
        tubes[pair[1]] = resample(pair[1])
    raise GeneratorException(f"family still not essentially distinct after {max_tries} re-samples")

def _ball_point(rng, radius):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * radius * rng.uniform() ** (1 / 3)

def hemisphere_net(delta):
    """Directions on latitude rings of the upper hemisphere with spacing
    NET_SPACING * delta; pairwise line angles are at least delta."""
    h = NET_SPACING * delta
    rings = int(math.floor(math.pi / (2 * h)))
    directions = []
    for i in range(rings):
        theta = (i + 0.5) * h
        m = max(1, int(math.floor(2 * math.pi * math.sin(theta) / h)))
        phase = 0.5 * (i % 2)
        phi = 2 * math.pi * (np.arange(m) + phase) / m
        st = math.sin(theta)
        directions.append(np.stack([st * np.cos(phi), st * np.sin(phi), np.full(m, math.cos(theta))],
                                   axis=1))
    return np.concatenate(directions)

def gen_direction_separated(delta, seed):
    """About delta^-2 tubes with delta separated directions and anchors
    jittered in B(0, 1/4)."""
    rng = make_rng(seed)
    directions = hemisphere_net(delta)
    tubes = [Tube(_ball_point(rng, ANCHOR_RADIUS), d, delta) for d in directions]

    def resample(i):
        return Tube(_ball_point(rng, ANCHOR_RADIUS), tubes[i].direction, delta)

    tubes = resolve_distinct(tubes, resample)
    logger.info(f"direction separated family: {len(tubes)} tubes at delta={delta:g}")
    return tubes

def gen_random_lines(delta, count, seed):
    """count tubes with uniform directions and anchors uniform in B(0, 1/4)"""
    if count < 1:
        raise GeneratorException(f"need at least one tube, got {count}")
    rng = make_rng(seed)

    def draw(_=None):
        d = rng.normal(size=3)
        return Tube(_ball_point(rng, ANCHOR_RADIUS), d / np.linalg.norm(d), delta)

    return resolve_distinct([draw() for _ in range(count)], draw)

def gen_coplanar(delta):
    """Tubes with axes in the plane y = 0.

    Angles cover the full circle of lines at a step of at least
    ANGLE_STEP delta; on every angle the axes are offset along the in-plane
    normal at a step of at least OFFSET_STEP delta with |offset| <= 1/2 - delta.
    """
    count = int(math.floor(math.pi / (ANGLE_STEP * delta)))
    angles = -math.pi / 2 + math.pi * np.arange(count) / count
    half = 0.5 - delta
    offsets = np.linspace(-half, half, int(math.floor(2 * half / (OFFSET_STEP * delta))) + 1)
    tubes = []
    for a in angles:
        d = np.array([math.sin(a), 0.0, math.cos(a)])
        n = np.array([math.cos(a), 0.0, -math.sin(a)])
        tubes.extend(Tube(o * n, d, delta) for o in offsets)
    logger.info(f"coplanar family: {len(tubes)} tubes at delta={delta:g}")
    return tubes

@dataclass
class StickyFamily:
    tubes: list
    tree: CoverTree
    branching: int
    depth: int

    @property
    def scale(self):
        return self.tubes[0].scale

def sticky_depth(delta, branching):
    """m with branching^-m closest to delta"""
    if branching < 2:
        raise GeneratorException(f"branching factor must be at least 2, got {branching}")
    return max(1, int(round(math.log(1 / delta) / math.log(branching))))

def _digits(index, base, depth):
    out = []
    for _ in range(depth):
        index, r = divmod(index, base)
        out.append(r)
    return out[::-1]

def _sticky_param(digits, base, level):
    """Center in [0,1] of the level cell selected by the leading digits"""
    return sum(d * base ** -(i + 1) for i, d in enumerate(digits[:level])) + base ** -level / 2

def gen_sticky(delta, branching, seed):
    """Balanced multi-scale family with delta snapped to branching^-m.

    A level i tube of scale rho_i = branching^-i spawns branching^2
    children: branching angles in the xz plane times branching offsets
    along y. Leaves sit on an (ANGLE_STEP delta) x (OFFSET_STEP delta)
    lattice of (angle, offset) and every level i tube of the returned
    CoverTree holds exactly branching^(2(m-i)) of them. The seed turns the
    whole family about the z axis.
    """
    m = sticky_depth(delta, branching)
    snapped = float(branching) ** -m
    if not math.isclose(snapped, delta, rel_tol=1e-9):
        logger.info(f"sticky family: delta {delta:g} snapped to {branching}^-{m} = {snapped:g}")
    delta = snapped
    phi = make_rng(seed).uniform(0, 2 * math.pi)
    turn = np.array([[math.cos(phi), -math.sin(phi), 0], [math.sin(phi), math.cos(phi), 0], [0, 0, 1.0]])
    def tube(u, v, radius):
        a = ANGLE_STEP * (u - 0.5)
        d = turn @ np.array([math.sin(a), 0.0, math.cos(a)])
        return Tube(turn @ np.array([0.0, OFFSET_STEP * (v - 0.5), 0.0]), d, radius, 1.0, delta)

    side = branching ** m
    leaves = []
    digits = []
    for j in range(side):
        for k in range(side):
            dj, dk = _digits(j, branching, m), _digits(k, branching, m)
            digits.append((dj, dk))
            leaves.append(tube(_sticky_param(dj, branching, m), _sticky_param(dk, branching, m), delta))
    levels = []
    for level in range(m + 1):
        rho = float(branching) ** -level
        keys = {}
        for index, (dj, dk) in enumerate(digits):
            keys.setdefault((tuple(dj[:level]), tuple(dk[:level])), []).append(index)
        cover, buckets, parents = [], [], []
        for (pj, pk), bucket in keys.items():
            radius = delta if level == m else rho + delta
            cover.append(tube(_sticky_param(list(pj), branching, level),
                              _sticky_param(list(pk), branching, level), radius))
            buckets.append(np.array(bucket, dtype=int))
            if level:
                parent = (pj[:-1], pk[:-1])
                parents.append(list(levels[-1][1]).index(parent))
            else:
                parents.append(-1)
        levels.append((CoverLevel(rho, cover, buckets, np.array(parents, dtype=int)), list(keys)))
    tree = CoverTree([lv for lv, _ in levels], leaves)
    logger.info(f"sticky family: {len(leaves)} tubes, branching {branching}, depth {m}")
    return StickyFamily(leaves, tree, branching, m)
