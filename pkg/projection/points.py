"""Parameter point sets and their non-concentration.

Points live in [0,1]^n; covering numbers E_rho count the grid aligned
rho-cubes meeting the set. For a ball B(x, r), r dyadic in [delta, 1],

    Katz-Tao:  E_delta(A & B(x,r)) <= C (r / delta)^s
    Frostman:  E_delta(A & B(x,r)) <= C r^s E_delta(A)

and the error of a set is the least C over balls centered on an r/2-net
near the set. Counts inside balls use the centers of the occupied
delta-cubes.
"""
import math
from enum import Enum
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from util.dyadic import scale_exponent, dyadic_scales, log2_inverse
from util.exceptions import ProjectionException

_EDGE_TOL = 1e-9

class NonConcentration(Enum):
    KATZ_TAO = "katz-tao"
    FROSTMAN = "frostman"

class ParamPointSet:
    """Finite subset of [0,1]^n at resolution `scale`.

    With snap=True the points are replaced by the centers of the distinct
    delta-cubes they occupy.
    """

    def __init__(self, points, scale, snap=False):
        scale_exponent(scale)
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[1] < 1:
            raise ProjectionException(f"points must form an (N, n) array, got shape {points.shape}")
        if len(points) and (points.min() < -_EDGE_TOL or points.max() > 1 + _EDGE_TOL):
            raise ProjectionException("points outside [0,1]^n")
        self.scale = float(scale)
        self.points = np.clip(points, 0.0, 1.0)
        if snap:
            self.points = self.cube_centers()

    def __len__(self):
        return len(self.points)

    @property
    def n(self):
        return self.points.shape[1]

    def cubes(self, rho=None):
        """Integer index of the rho-cube holding each point"""
        rho = self.scale if rho is None else rho
        count = int(round(1 / rho))
        return np.minimum(np.floor(self.points / rho + 1e-12).astype(np.int64), count - 1)

    def covering_number(self, rho=None) -> int:
        if len(self) == 0:
            return 0
        return len(np.unique(self.cubes(rho), axis=0))

    def cube_centers(self):
        """Centers of the distinct occupied delta-cubes"""
        if len(self) == 0:
            return self.points[:0]
        return (np.unique(self.cubes(), axis=0) + 0.5) * self.scale

    def subset(self, mask):
        return ParamPointSet(self.points[mask], self.scale)

    def to_dict(self):
        return {"scale": self.scale, "points": self.points.tolist()}

    @staticmethod
    def from_dict(data):
        return ParamPointSet(data["points"], data["scale"])

    def __repr__(self):
        return f"ParamPointSet(n={self.n}, points={len(self)}, scale={self.scale:g})"

def _net_centers(points, r):
    """r/2-net points within one net step of the given points"""
    h = r / 2
    n = points.shape[1]
    offsets = np.stack(np.meshgrid(*([np.arange(-1, 2)] * n), indexing="ij"), axis=-1).reshape(-1, n)
    base = np.rint(points / h).astype(np.int64)
    net = np.unique((base[:, None, :] + offsets[None]).reshape(-1, n), axis=0)
    return net * h

def _bound(mode, r, scale, s, total):
    if mode is NonConcentration.KATZ_TAO:
        return (r / scale) ** s
    return r ** s * total

def _check_exponent(p, s):
    if len(p) == 0:
        raise ProjectionException("non-concentration of an empty set")
    if not 0 < s <= p.n:
        raise ProjectionException(f"exponent s={s} outside (0, {p.n}]")

def nonconcentration_profile(p: ParamPointSet, s, mode: NonConcentration):
    """Worst ball per dyadic radius.

    :returns: list of (r, count, center, C_r) with C_r = count / bound
    """
    _check_exponent(p, s)
    cubes = p.cube_centers()
    total = len(cubes)
    tree = cKDTree(cubes)
    profile = []
    for r in dyadic_scales(p.scale, 1.0):
        centers = _net_centers(cubes, r)
        counts = np.asarray(tree.query_ball_point(centers, r * (1 + 1e-9), return_length=True))
        k = int(np.argmax(counts))
        profile.append((r, int(counts[k]), centers[k], counts[k] / _bound(mode, r, p.scale, s, total)))
    return profile

def nonconcentration_error(p: ParamPointSet, s, mode: NonConcentration) -> float:
    """Least C making p a (delta, s, C) Katz-Tao or Frostman set.

    :p: non-empty ParamPointSet
    :s: exponent in (0, n]
    :mode: NonConcentration
    :raises ProjectionException: for an empty set or s outside (0, n]

    """
    return float(max(c for _, _, _, c in nonconcentration_profile(p, s, mode)))

def eta_levels(scale, eta):
    """Scales 2^(-j ceil(1/eta)) in (delta, 1], coarsest first"""
    if eta <= 0:
        raise ProjectionException(f"eta must be positive, got {eta}")
    step = math.ceil(1 / eta - 1e-9)
    k = scale_exponent(scale)
    return [2.0 ** -(j * step) for j in range(0, (k + step - 1) // step)]

def _labels(cubes, ratio):
    _, labels = np.unique(cubes // ratio, axis=0, return_inverse=True)
    return labels.reshape(-1)

def uniformity_profile(p: ParamPointSet, eta):
    """(rho, largest over smallest E_delta(Q & A)) for every level rho"""
    cubes = np.unique(p.cubes(), axis=0)
    profile = []
    for rho in eta_levels(p.scale, eta):
        counts = np.bincount(_labels(cubes, int(round(rho / p.scale))))
        counts = counts[counts > 0]
        profile.append((rho, float(counts.max() / counts.min())))
    return profile

def is_eta_uniform(p: ParamPointSet, eta, factor=100.0) -> bool:
    if len(p) == 0:
        return True
    return all(ratio <= factor for _, ratio in uniformity_profile(p, eta))

def uniform_refine(p: ParamPointSet, eta) -> ParamPointSet:
    """eta-uniform refinement by dyadic pigeonholing, finest level first.

    At each level rho the occupied rho-cubes are sorted into bands
    [2^i, 2^(i+1)) of their delta-cube counts; the band carrying the most
    delta-cubes is kept. Dropping whole cubes never changes the counts of
    finer cubes, so every level ends within a factor 2.

    :p: ParamPointSet
    :eta: level step exponent, levels 2^(-j ceil(1/eta))
    :returns: the retained points

    """
    if len(p) == 0:
        return p
    levels = eta_levels(p.scale, eta)
    step = math.ceil(1 / eta - 1e-9)
    if scale_exponent(p.scale) % step:
        logger.info(f"delta={p.scale:g} is not a power of 2^-{step}: finest level step is shorter")
    cubes, inverse = np.unique(p.cubes(), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    alive = np.ones(len(cubes), dtype=bool)
    for rho in reversed(levels[1:]):
        labels = _labels(cubes, int(round(rho / p.scale)))
        counts = np.bincount(labels[alive], minlength=labels.max() + 1)
        occupied = counts > 0
        bands = np.full(len(counts), -1)
        bands[occupied] = np.floor(np.log2(counts[occupied])).astype(int)
        mass = np.bincount(bands[occupied], weights=counts[occupied])
        best = int(np.argmax(mass))
        alive &= (bands == best)[labels]
        logger.debug(f"uniform refine rho={rho:g}: band [{2 ** best}, {2 ** (best + 1)}) keeps "
                     f"{int(alive.sum())} of {len(cubes)} cubes")
    return p.subset(alive[inverse])

@dataclass
class KatzTaoPruning:
    pruned: ParamPointSet
    retained: int               # E_delta of the pruned set
    floor: float                # delta^s E_delta(A) / (8 C_F log2(1/delta))
    frostman: float             # Frostman error C_F of the input
    removed_rounds: int

    @property
    def meets_floor(self):
        return self.retained >= self.floor

    def to_dict(self):
        return {"retained": self.retained, "floor": self.floor, "frostman": self.frostman,
                "rounds": self.removed_rounds, "meets_floor": self.meets_floor}

def katz_tao_prune(p: ParamPointSet, s, C=100.0, max_rounds=10000) -> KatzTaoPruning:
    """Greedy (delta, s, C) Katz-Tao subset.

    While some ball B(x, r) holds more than C (r/delta)^s delta-cubes, the
    cubes of that ball beyond the allowed number are deleted.

    :raises ProjectionException: for an empty set, s outside (0, n] or C < 1

    """
    _check_exponent(p, s)
    if C < 1:
        raise ProjectionException(f"Katz-Tao constant must be at least 1, got {C}")
    frostman = nonconcentration_error(p, s, NonConcentration.FROSTMAN)
    cubes = p.cube_centers()
    alive = np.ones(len(cubes), dtype=bool)
    rounds = 0
    while rounds < max_rounds:
        current = ParamPointSet(cubes[alive], p.scale)
        r, count, center, worst = max(nonconcentration_profile(current, s, NonConcentration.KATZ_TAO),
                                      key=lambda row: row[3])
        if worst <= C:
            break
        allowed = max(1, int(math.floor(C * (r / p.scale) ** s)))
        positions = np.flatnonzero(alive)
        members = np.sort(cKDTree(cubes[alive]).query_ball_point(center, r * (1 + 1e-9)))
        alive[positions[members[allowed:]]] = False
        rounds += 1
    pruned = ParamPointSet(cubes[alive], p.scale)
    floor = p.scale ** s * len(cubes) / (8 * frostman * log2_inverse(p.scale))
    logger.debug(f"Katz-Tao pruning kept {int(alive.sum())} of {len(cubes)} cubes in {rounds} rounds")
    return KatzTaoPruning(pruned, int(alive.sum()), floor, frostman, rounds)

@dataclass
class SpacingScan:
    rho: float                  # chosen scale, None when no scale lies in range
    exponent: float             # worst rescaled Frostman error as (delta/rho)^-exponent
    target: float               # 4 n eps
    per_scale: list             # (rho, worst error, exponent)

    @property
    def satisfied(self):
        return self.rho is not None and self.exponent <= self.target

    def to_dict(self):
        return {"rho": self.rho, "exponent": self.exponent, "target": self.target,
                "satisfied": self.satisfied,
                "per_scale": [{"rho": r, "worst": w, "exponent": x} for r, w, x in self.per_scale]}

def rescale_cube(p: ParamPointSet, cube, rho) -> ParamPointSet:
    """Points of one rho-cube mapped affinely onto [0,1]^n at scale delta/rho"""
    mask = np.all(p.cubes(rho) == cube, axis=1)
    local = (p.points[mask] - np.asarray(cube) * rho) / rho
    return ParamPointSet(np.clip(local, 0.0, 1.0), p.scale / rho)

def spacing_scan(p: ParamPointSet, s, eps) -> SpacingScan:
    """Scan every dyadic rho in (delta^(1-eps), 1] for the scale at which
    every occupied rho-cube, rescaled to the unit cube, is the least
    Frostman concentrated.

    :returns: SpacingScan with the best rho by the exponent of its worst cube
    """
    _check_exponent(p, s)
    target = 4 * p.n * eps
    floor = p.scale ** (1 - eps)
    per_scale = []
    best = (None, math.inf)
    for rho in dyadic_scales(p.scale, 1.0):
        if rho <= floor * (1 + 1e-12) or rho <= p.scale:
            continue
        worst = 0.0
        for cube in np.unique(p.cubes(rho), axis=0):
            local = rescale_cube(p, cube, rho)
            worst = max(worst, nonconcentration_error(local, s, NonConcentration.FROSTMAN))
        exponent = math.log(worst) / math.log(rho / p.scale) if worst > 1 else 0.0
        per_scale.append((rho, worst, exponent))
        if exponent < best[1]:
            best = (rho, exponent)
    return SpacingScan(best[0], best[1], target, per_scale)
