"""Two-scale amplification of a shaded family.

Repeatedly scans the shaded union for a ball of small density exponent,
strips the ball from the shadings, and stops once half of the shaded mass
is gone. The recorded balls are pigeonholed to one dyadic (rho, r) pair
and thinned to a disjoint subfamily; the shading restricted to those balls
is the output.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from shading.family import ShadedFamily
from shading.measures import multiplicity
from voxel.grid import VoxelSet, ball_sums, ball_set, dilate_set, snap_to_cell, cell_centers
from assouad.scan import scan_candidates
from util.dyadic import log2_inverse
from util.exceptions import AssouadException, AmplificationException

DEFAULT_EPS = 0.5

@dataclass
class AmplifyStep:
    """One ball stripped from the shadings"""
    iteration: int
    rho: float
    r: float
    center: np.ndarray
    zeta: float
    mass: int                   # shaded cells captured by the ball

    def to_row(self):
        x, y, z = (float(c) for c in self.center)
        return {"iteration": self.iteration, "rho": self.rho, "r": self.r,
                "x": x, "y": y, "z": z, "zeta": self.zeta, "mass": self.mass}

@dataclass
class Amplification:
    refined: ShadedFamily
    rho: float
    r: float
    ratio_exponent: float
    trace: list = field(default_factory=list)
    selected: list = field(default_factory=list)    # trace indices of the kept balls
    input_mass: int = 0

    @property
    def retained_mass(self):
        return self.refined.mass_cells

def iteration_bound(scale):
    return int(math.ceil(10 * log2_inverse(scale) ** 2))

def _snapped(center, scale):
    cell = snap_to_cell(center, scale)[0]
    return cell_centers(scale)[cell]

def _pick_ball(union: VoxelSet, counts, min_separation, eps):
    """Ball of zeta <= eps holding the most shaded mass, else the ball of
    least zeta that holds any. Returns (rho, r, center, zeta, mass)."""
    preferred, fallback = None, None
    for rho, r, centers, _, zetas in scan_candidates(union, min_separation):
        if len(centers) == 0:
            continue
        masses = ball_sums(counts, union.scale, centers, r)
        holding = masses > 0
        small = holding & (zetas <= eps)
        if small.any():
            j = int(np.argmax(np.where(small, masses, -1)))
            if preferred is None or masses[j] > preferred[4]:
                preferred = (rho, r, centers[j], float(zetas[j]), int(masses[j]))
        if holding.any():
            j = int(np.argmin(np.where(holding, zetas, np.inf)))
            if fallback is None or zetas[j] < fallback[3]:
                fallback = (rho, r, centers[j], float(zetas[j]), int(masses[j]))
    return preferred or fallback

def _pigeonhole(trace):
    """Dyadic (rho, r) pair carrying the most captured mass"""
    mass = {}
    for step in trace:
        key = (step.rho, step.r)
        mass[key] = mass.get(key, 0) + step.mass
    return max(mass, key=lambda k: mass[k])

def _disjoint(trace, indices, scale):
    """Greedy selection by decreasing mass of balls with centers more than
    2r apart"""
    order = sorted(indices, key=lambda i: -trace[i].mass)
    kept, centers = [], []
    for i in order:
        c = _snapped(trace[i].center, scale)
        if all(np.linalg.norm(c - other) > 2 * trace[i].r for other in centers):
            kept.append(i)
            centers.append(c)
    return sorted(kept)

def ratio_exponent(e: VoxelSet, rho, r):
    """Exponent with |N_rho(e)| = (rho/r)^eps |N_r(e)|"""
    inner = dilate_set(e, rho).popcount
    outer = dilate_set(e, r).popcount
    value = math.log(inner / outer) / math.log(rho / r)
    return value if value != 0 else 0.0

def two_scale_amplify(f: ShadedFamily, min_separation, eps=DEFAULT_EPS, max_iterations=None):
    """Find two separated scales at which a large part of the shading looks
    three dimensional.

    :f: ShadedFamily with positive shaded mass
    :min_separation: A, the least allowed r / rho
    :eps: target exponent for the ball choice
    :max_iterations: loop bound, default 10 log2(1/delta)^2
    :returns: Amplification
    :raises AmplificationException: "amplification did not converge"

    """
    total = f.mass_cells
    if total == 0:
        raise AssouadException("cannot amplify a family with no shaded mass")
    bound = max_iterations or iteration_bound(f.scale)
    current = f
    trace = []
    while 2 * (total - current.mass_cells) < total:
        if len(trace) >= bound:
            raise AmplificationException("amplification did not converge")
        counts = multiplicity(current).counts
        rho, r, center, zeta, mass = _pick_ball(current.union(), counts, min_separation, eps)
        current = current.remove(ball_set(center, r, f.scale))
        trace.append(AmplifyStep(len(trace), rho, r, np.asarray(center), zeta, mass))
        logger.debug(f"amplify step {len(trace)}: rho={rho:g} r={r:g} zeta={zeta:.3f} "
                     f"mass={mass}, {current.mass_cells}/{total} left")
    rho, r = _pigeonhole(trace)
    band = [i for i, step in enumerate(trace) if (step.rho, step.r) == (rho, r)]
    selected = _disjoint(trace, band, f.scale)
    keep = VoxelSet.empty(f.scale)
    for i in selected:
        keep = keep | ball_set(trace[i].center, r, f.scale)
    refined = f.restrict(keep)
    exponent = ratio_exponent(refined.union(), rho, r)
    logger.info(f"two-scale amplification: rho={rho:g} r={r:g} exponent={exponent:.4f} "
                f"kept {refined.mass_cells}/{total} cells in {len(selected)} balls")
    return Amplification(refined, rho, r, exponent, trace, selected, total)
