"""One coarsening step of the prism dichotomy, and the driver that repeats it.

The input is a shaded multiset of s x t x L prisms. A step either finds a
ball B of radius r >> s with |B & N_s(E)| >= (s/r)^eps |B|, E being the
shaded union (branch A), or replaces the family by a shaded multiset of
wider s' x t' x L prisms built around the prisms whose planes and lines
agree (branch B).

Every threshold of the step is a named field of CoarsenConfig; when no
branch can be certified with them the step raises DichotomyInconclusive
with its measurements.
"""
import math
from enum import Enum
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from geometry.solids import Prism
from geometry.family import SolidArrays
from geometry.containment import contained_mask, dilate_solid
from shading.family import ShadedFamily
from shading.measures import pigeonhole_uniform, density
from shading.regular import regularize
from voxel.grid import dilate_set, ball_counts, solid_cells
from assouad.scan import ScanResult, zeta_of
from axioms.catalog import anchor_indices
from prisms.spread import SpreadKind, spread_field, spread_bands
from util.dyadic import pigeonhole_loss, log2_inverse
from util.exceptions import PrismLabException, DichotomyInconclusive

class Branch(Enum):
    A = "A"
    B = "B"

@dataclass
class CoarsenConfig:
    """Named thresholds of the coarsening step.

    separation: least r / s of a branch A ball
    mu_factor: the multiplicity is small below mu_factor times the evenly
        spread multiplicity sum |R| / |domain| (floored at 1)
    plane_factor: plane spreads below plane_factor s / t are noise, and the
        thickened prisms have thickness s1 = plane_factor s
    line_factor: line spreads below line_factor t are noise
    spread_fraction: share of a prism one plane spread band must fill,
        default 1 / (100 log2(1/delta)^2)
    max_anchors: prisms probed for a plane spread band
    max_centers: ball centers probed per band
    max_rounds: rounds of run_dichotomy
    """
    separation: float = 4.0
    mu_factor: float = 4.0
    plane_factor: float = 4.0
    line_factor: float = 2.0
    spread_fraction: float = None
    max_anchors: int = 64
    max_centers: int = 64
    max_rounds: int = 8

    def fraction(self, scale):
        if self.spread_fraction is not None:
            return self.spread_fraction
        return 1.0 / (100.0 * log2_inverse(scale) ** 2)

    def to_dict(self):
        return {"separation": self.separation, "mu_factor": self.mu_factor,
                "plane_factor": self.plane_factor, "line_factor": self.line_factor,
                "spread_fraction": self.spread_fraction, "max_anchors": self.max_anchors,
                "max_centers": self.max_centers, "max_rounds": self.max_rounds}

@dataclass
class CoarsenResult:
    branch: Branch
    s: float                    # thickness after the step
    t: float                    # width after the step
    scan: ScanResult = None     # branch A witness
    family: ShadedFamily = None # branch B prisms
    record: dict = field(default_factory=dict)

def prism_dims(solids):
    """Common (s, t, length) of a prism family"""
    if not solids or not all(isinstance(p, Prism) for p in solids):
        raise PrismLabException("coarsening needs a non-empty family of prisms")
    dims = np.array([p.dims for p in solids])
    if not np.allclose(dims, dims[0], rtol=1e-6, atol=0):
        raise PrismLabException("prisms of mixed dimensions")
    return tuple(float(d) for d in dims[0])

def _cell_points(cells, shape, scale):
    idx = np.stack(np.unravel_index(cells, shape), axis=1)
    return -1.0 + (idx + 0.5) * scale

def _best_ball(e, dilated, centers, r, s):
    hits, totals = ball_counts(e, centers, r, s, dilated)
    dens = hits / totals
    k = int(np.argmax(dens))
    if dens[k] == 0:
        return None
    return ScanResult(zeta_of(float(dens[k]), s, r), s, r, np.asarray(centers[k]), float(dens[k]))

def _regular(f: ShadedFamily):
    return f.with_shadings([regularize(f.shading_set(i), s).indices()
                            for i, s in enumerate(f.solids)])

def _plane_spread_ball(f, planes, s, t, eps, config, e, dilated, record):
    """Search a prism and a plane spread band filling a large part of it,
    then a ball of radius t theta around that band"""
    fraction = config.fraction(f.scale)
    probes = 0
    theta0 = config.plane_factor * s / t
    for i in anchor_indices(len(f), config.max_anchors):
        cells = f.cells[i]
        if len(cells) == 0:
            continue
        theta = theta0
        while theta <= math.pi / 2:
            band = planes.band_of(cells, theta)
            if len(band) >= fraction * len(cells):
                r = min(1.0, max(t * theta, config.separation * s))
                if r > s:
                    pick = anchor_indices(len(band), config.max_centers)
                    scan = _best_ball(e, dilated, _cell_points(band[pick], f.shape, f.scale), r, s)
                    probes += 1
                    if scan is not None and scan.zeta <= eps:
                        record.update(step=3, prism=int(i), theta=theta, zeta=scan.zeta)
                        return scan
            theta *= 2
    record["plane_probes"] = probes
    return None

def _coarse_shading(f, prism, arrays, s_new):
    """R' & N_s'(union of Y(R) over input prisms R inside 2R')"""
    inside = np.flatnonzero(contained_mask(arrays, dilate_solid(prism, 2)))
    cells = solid_cells(prism, f.scale)
    if len(inside) == 0:
        return cells, cells[:0]
    near = dilate_set(f.subfamily(inside).union(), s_new).occupancy.reshape(-1)
    return cells, cells[near[cells]]

def coarsen_step(f: ShadedFamily, eps, config=None) -> CoarsenResult:
    """One step of the prism dichotomy on a shaded s x t x L prism family.

    Step 1 pigeonholes the multiplicity mu; a small mu calls for a direct
    unit ball measurement. Step 3 looks for a prism with a plane spread
    band [theta, 2 theta) filling a fixed share of it and measures balls of
    radius t theta. Steps 4 and 5 keep the cells of low plane spread,
    pigeonhole the line spread band theta, and build the s' x t' x L prisms
    with s' = s1 theta / t and t' = min(1, t s' / s) around the prisms
    carrying that band.

    :f: ShadedFamily of Prism of common dimensions, s <= t
    :eps: target exponent of branch A
    :config: CoarsenConfig
    :returns: CoarsenResult
    :raises DichotomyInconclusive: when neither branch is certified
    :raises PrismLabException: "hypothesis violated" for s > t or s below the grid

    """
    config = config or CoarsenConfig()
    s, t, length = prism_dims(f.solids)
    if s > t * (1 + 1e-9) or s < f.scale * (1 - 1e-9):
        raise PrismLabException(f"hypothesis violated: need delta <= s <= t, got s={s}, t={t}")
    if f.mass_cells == 0:
        raise PrismLabException("hypothesis violated: empty shading")
    record = {"s": s, "t": t, "count": len(f), "density": density(f)[0]}
    trace = [record]
    e = f.union()
    dilated = dilate_set(e, s)
    loss = pigeonhole_loss(int(round(1 / f.scale)))

    # Step 1: multiplicity
    mu, y1 = pigeonhole_uniform(f)
    even = max(1.0, float(f.solid_sizes().sum()) / np.prod(f.shape))
    record.update(mu=mu, even_mu=even)
    if mu <= config.mu_factor * even and config.separation * s <= 1.0:
        scan = _best_ball(e, dilated, np.zeros((1, 3)), 1.0, s)
        record["unit_zeta"] = None if scan is None else scan.zeta
        if scan is not None and scan.zeta <= eps:
            record.update(branch=Branch.A.value, step=1)
            logger.debug(f"coarsen step: small multiplicity {mu}, unit ball zeta={scan.zeta:.3f}")
            return CoarsenResult(Branch.A, s, t, scan=scan, record=record)
    y2 = _regular(y1)

    # Step 3: plane spread
    planes = spread_field(y2, SpreadKind.PLANE)
    scan = _plane_spread_ball(f, planes, s, t, eps, config, e, dilated, record)
    if scan is not None:
        record["branch"] = Branch.A.value
        return CoarsenResult(Branch.A, s, t, scan=scan, record=record)

    # Step 4: low plane spread, line spread band
    s1 = config.plane_factor * s
    y3 = [planes.below(y, s1 / t + 1e-12) for y in y2.shadings]
    keep = [i for i, y in enumerate(y3) if len(f.shadings[i]) and len(y) >= loss * len(f.shadings[i])]
    record["low_plane"] = len(keep)
    if not keep:
        raise DichotomyInconclusive(trace)
    sub = f.subfamily(keep).with_shadings([y3[i] for i in keep])
    lines = spread_field(sub, SpreadKind.LINE)
    all_cells = np.concatenate(sub.shadings)
    owner = np.repeat(np.arange(len(sub)), [len(y) for y in sub.shadings])
    best = None
    for theta, mask in spread_bands(lines, all_cells, config.line_factor * t):
        per_prism = np.bincount(owner[mask], minlength=len(sub))
        if best is None or per_prism.sum() > best[1].sum():
            best = (theta, per_prism)
    theta, band = best
    sizes = np.array([len(y) for y in sub.shadings])
    carriers = [keep[j] for j in np.flatnonzero(band >= loss * sizes)]
    record.update(theta=theta, carriers=len(carriers))
    if not carriers:
        raise DichotomyInconclusive(trace)

    # Step 5: wider prisms
    cap = max(1.0, t)
    s_new = s1 * theta / t
    t_new = min(cap, t * s_new / s)
    s_new = min(s_new, t_new)
    arrays = SolidArrays(f.solids)
    prisms, cells, shadings = [], [], []
    for i in carriers:
        old = f.solids[i]
        prism = Prism(old.center, old.frame, (s_new / 2, t_new / 2, length / 2))
        c, y = _coarse_shading(f, prism, arrays, s_new)
        prisms.append(prism)
        cells.append(c)
        shadings.append(y)
    coarse = ShadedFamily(prisms, shadings, f.scale, cells, check=False)
    new_density = density(coarse)[0]
    record.update(s_new=s_new, t_new=t_new, new_density=new_density)
    if new_density < loss * record["density"]:
        raise DichotomyInconclusive(trace)
    record.update(branch=Branch.B.value, step=5)
    logger.debug(f"coarsen step: {len(f)} prisms {s:g}x{t:g} -> {len(coarse)} prisms "
                 f"{s_new:g}x{t_new:g}, theta={theta:g}, density {new_density:.3f}")
    return CoarsenResult(Branch.B, s_new, t_new, family=coarse, record=record)

@dataclass
class DichotomyRun:
    """Outcome of repeated coarsening.

    branch: A when a round certified a ball, B when the prisms reached
    full width; scan is the ball of the last round (for B, the unit ball
    around the full width shading at scale s')
    """
    branch: Branch
    scan: ScanResult
    family: ShadedFamily
    rounds: list
    eps: float

    @property
    def certified(self):
        return self.scan is not None and self.scan.zeta <= self.eps

def run_dichotomy(f: ShadedFamily, eps, config=None, on_round=None) -> DichotomyRun:
    """Repeat coarsen_step until branch A or full width prisms.

    :on_round: callable receiving each round's record (e.g. a trace writer)
    :raises DichotomyInconclusive: after config.max_rounds rounds, or when a
        round is inconclusive, with every record so far

    """
    config = config or CoarsenConfig()
    rounds = []
    current = f
    for k in range(config.max_rounds):
        try:
            result = coarsen_step(current, eps, config)
        except DichotomyInconclusive as exc:
            exc.trace[-1]["round"] = k
            raise DichotomyInconclusive(rounds + exc.trace) from exc
        result.record["round"] = k
        rounds.append(result.record)
        if on_round is not None:
            on_round(result.record)
        logger.info(f"dichotomy round {k}: branch {result.branch.value}, "
                    f"{result.s:g} x {result.t:g}")
        if result.branch is Branch.A:
            return DichotomyRun(Branch.A, result.scan, current, rounds, eps)
        current = result.family
        if result.t >= 1.0 * (1 - 1e-9):
            scan = None
            if result.s < 1.0:
                e = current.union()
                scan = _best_ball(e, dilate_set(e, result.s), np.zeros((1, 3)), 1.0, result.s)
            return DichotomyRun(Branch.B, scan, current, rounds, eps)
    raise DichotomyInconclusive(rounds)
