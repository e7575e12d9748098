"""Clustering the tubes of a thin host rectangle into wider prisms.

Inside a delta-thin host, the line spread of the tubes is pigeonholed to a
dyadic band [theta, 2 theta). Every tube carrying enough of that band grows
the prism made of the host's slab around it with width 4 theta; these
prisms are thinned greedily to an essentially distinct set.
"""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from geometry.solids import Prism
from geometry.family import SolidArrays, family_scale
from geometry.containment import contained_mask, essentially_distinct
from shading.family import ShadedFamily
from voxel.grid import solid_cells
from prisms.spread import SpreadKind, spread_field, spread_bands
from util.dyadic import pigeonhole_loss
from util.exceptions import PrismLabException, ContainmentException, DichotomyInconclusive

@dataclass
class Clustering:
    omega: float
    theta: float
    prisms: list
    coverage: float             # share of tubes inside some emitted prism
    members: list = field(default_factory=list)
    fill: list = field(default_factory=list)    # |union of Y(T), T in R| / |R| per prism
    retained: int = 0           # tubes that carried the chosen band
    coverage_floor: float = 0.0

    def to_dict(self):
        return {"omega": self.omega, "theta": self.theta, "prisms": [p.to_dict() for p in self.prisms],
                "coverage": self.coverage, "coverage_floor": self.coverage_floor, "fill": self.fill,
                "retained": self.retained}

def coverage_floor(delta):
    """Share of the tubes the emitted prisms must hold: one over the number
    of dyadic spread bands, 1 / (2 log2(1/delta) + 2)"""
    return pigeonhole_loss(int(round(1 / delta)))

def check_coverage(clustering: Clustering):
    """:raises DichotomyInconclusive: when the prisms hold less than the
    guaranteed share of the tubes, with the clustering as the trace"""
    if clustering.coverage < clustering.coverage_floor:
        logger.warning(f"clustering covers {clustering.coverage:.3f} of the tubes, "
                       f"below {clustering.coverage_floor:.3f}")
        raise DichotomyInconclusive([{"step": "cluster", "theta": clustering.theta,
                                      "coverage": clustering.coverage,
                                      "coverage_floor": clustering.coverage_floor,
                                      "retained": clustering.retained,
                                      "prisms": len(clustering.prisms)}])
    return clustering

def slab_prism(host: Prism, tube, theta):
    """Host slab around a tube: the host's normal, the tube's in-plane
    direction, width 4 theta and the tube's length"""
    u = host.normal
    d = tube.direction - np.dot(tube.direction, u) * u
    norm = np.linalg.norm(d)
    w = d / norm if norm > 1e-12 else host.axis
    v = np.cross(w, u)
    offset = np.dot(tube.anchor - host.center, u)
    center = tube.anchor - offset * u
    return Prism(center, np.stack([u, v, w]), (host.half_dims[0], 2 * theta,
                                                tube.length / 2 + tube.radius))

def _thin(candidates, arrays):
    """Essentially distinct prisms, most populated first"""
    masks = [contained_mask(arrays, p) for p in candidates]
    order = sorted(range(len(candidates)), key=lambda k: (-int(masks[k].sum()), k))
    kept = []
    for k in order:
        if all(essentially_distinct(candidates[k], candidates[j]) for j in kept):
            kept.append(k)
    return sorted(kept), masks

def cluster_into_prisms(f: ShadedFamily, host: Prism, K) -> Clustering:
    """Cluster the tubes of a delta-thin host into delta x omega x 1 prisms.

    :f: ShadedFamily of Tube, every tube inside host
    :host: Prism whose width host.t plays the role of rho
    :K: richness, at least K rho / delta tubes are required
    :returns: Clustering with omega = 4 theta
    :raises ContainmentException: for tubes outside host
    :raises PrismLabException: "hypothesis violated" for too few tubes
    :raises DichotomyInconclusive: when the prisms hold less than
        coverage_floor(delta) of the tubes

    """
    delta = family_scale(f.solids)
    rho = host.t
    arrays = SolidArrays(f.solids)
    outside = np.flatnonzero(~contained_mask(arrays, host))
    if len(outside):
        raise ContainmentException([(int(i), f.solids[i]) for i in outside])
    if len(f) < K * rho / delta:
        raise PrismLabException(f"hypothesis violated: {len(f)} tubes < K rho / delta = "
                                f"{K * rho / delta:g}")
    spread = spread_field(f, SpreadKind.LINE, use_shading=False)
    all_cells = np.concatenate(f.cells)
    owner = np.repeat(np.arange(len(f)), [len(c) for c in f.cells])
    sizes = f.solid_sizes()
    best = None
    for theta, mask in spread_bands(spread, all_cells, delta, rho):
        per_tube = np.bincount(owner[mask], minlength=len(f))
        if best is None or per_tube.sum() > best[1].sum():
            best = (theta, per_tube)
    theta, band = best
    floor = coverage_floor(delta)
    retained = np.flatnonzero(band >= floor * np.maximum(sizes, 1))
    candidates = [slab_prism(host, f.solids[i], theta) for i in retained]
    kept, masks = _thin(candidates, arrays)
    prisms = [candidates[k] for k in kept]
    members = [np.flatnonzero(masks[k]) for k in kept]
    covered = np.zeros(len(f), dtype=bool)
    for m in members:
        covered[m] = True
    fill = []
    for p, m in zip(prisms, members):
        shaded = f.subfamily(m).union().occupancy.reshape(-1)
        cells = solid_cells(p, f.scale)
        fill.append(float(shaded[cells].mean()) if len(cells) else 0.0)
    result = Clustering(4 * theta, theta, prisms, float(covered.mean()), members, fill,
                        int(len(retained)), floor)
    logger.debug(f"clustered {len(f)} tubes at theta={theta:g}: {len(prisms)} prisms, "
                 f"coverage {result.coverage:.3f}")
    return check_coverage(result)
