"""Heavy rectangles: 2delta x 2rho x 2 boxes holding more than
delta^-eps (rho / delta) tubes of a family."""
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from geometry.solids import Prism
from geometry.family import family_scale
from axioms.catalog import WitnessScanner, anchor_indices
from axioms.checks import tube_family, check_essentially_distinct

@dataclass
class HeavyRectangle:
    prism: Prism
    rho: float
    count: int
    threshold: float
    members: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {"prism": self.prism.to_dict(), "rho": self.rho, "count": self.count,
                "threshold": self.threshold}

@dataclass
class HeavyScan:
    rectangles: list
    fraction: float             # share of tubes lying in some heavy rectangle
    eps: float
    scale: float

    @property
    def mostly_heavy(self):
        return self.fraction >= 0.5

def heavy_threshold(scale, rho, eps):
    return scale ** -eps * (rho / scale)

def detect_heavy(solids, eps, config=None, scale=None, check_distinct=True) -> HeavyScan:
    """Scan the anchored 2delta x 2rho x 2 boxes of a tube family for heavy ones.

    :solids: list of Tube
    :eps: heaviness exponent
    :config: CatalogConfig for the anchors and rotations
    :scale: delta of the family (default: the tubes' common scale)
    :returns: HeavyScan with one entry per distinct (rho, member set)
    :raises EssentialDistinctnessException: with check_distinct, on a repeated tube

    """
    arrays = tube_family(solids, "heavy rectangles")
    delta = scale or family_scale(arrays.solids)
    if check_distinct:
        check_essentially_distinct(arrays)
    scanner = WitnessScanner(arrays, config)
    seen = set()
    found = []
    covered = np.zeros(scanner.n, dtype=bool)
    for i in anchor_indices(scanner.n, scanner.config.max_anchors):
        for cand in scanner.box_ladder(i, s_min=2 * delta, s_max=2 * delta, fixed_length=2.0):
            rho = cand.t / 2
            threshold = heavy_threshold(delta, rho, eps)
            if scanner.candidate_count(cand.witness) <= threshold:
                continue
            members = scanner.members(cand.witness)
            if len(members) <= threshold:
                continue
            key = (round(rho, 12), tuple(members))
            if key in seen:
                continue
            seen.add(key)
            covered[members] = True
            found.append(HeavyRectangle(cand.witness.shape, rho, int(len(members)),
                                        threshold, members))
    fraction = float(covered.mean())
    logger.debug(f"heavy scan eps={eps}: {len(found)} rectangles, fraction {fraction:.3f}")
    return HeavyScan(found, fraction, eps, delta)

def heavy_by_level(tree, eps, config=None):
    """Heavy rectangle scans of every level of a CoverTree, each level's
    cover tubes taken at their own scale rho.

    :returns: list of (rho, HeavyScan)
    """
    scans = []
    for level in tree.levels:
        if not level.cover:
            continue
        scans.append((level.rho, detect_heavy(level.cover, eps, config, scale=level.rho,
                                              check_distinct=False)))
    return scans
