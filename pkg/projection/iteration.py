"""Multi-scale driver for the area of twisted projections.

Round k works at a scale rho_k (rho_0 = delta) on a shaded family of
rho_k-tubes. It projects the shadings, picks the next dyadic scale
rho_{k+1} > rho_k^(1 - eps^2) at which the projected union X loses the
least area to its neighbourhood,

    |X| >= C0^-1 (rho_k / rho_{k+1})^eps |N_{rho_{k+1}}(X)|,

and replaces the family by a partitioning cover of rho_{k+1}-tubes, each
shaded by N_{rho_{k+1}} of the shadings in its bucket. Rounds stop once
rho >= delta^(eps^2).
"""
import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from geometry.family import family_scale
from shading.family import ShadedFamily
from voxel.grid import VoxelSet, dilate_set, solid_cells
from axioms.covers import build_partitioning_cover
from projection.slope import SlopeFunction
from projection.twisted import project_family, PROJECTED_HALF_EXTENTS
from util.dyadic import dyadic_scales
from util.exceptions import ProjectionException

@dataclass
class IterationConfig:
    """eps: target exponent
    c0: slack of the single scale step
    max_rounds: default ceil(eps^-2)
    """
    eps: float = 0.5
    c0: float = 1.0
    max_rounds: int = None

    def rounds(self):
        return self.max_rounds if self.max_rounds is not None else math.ceil(self.eps ** -2)

    def to_dict(self):
        return {"eps": self.eps, "c0": self.c0, "max_rounds": self.rounds()}

@dataclass
class IterationRound:
    round: int
    rho: float
    rho_next: float
    tubes: int
    area: float                 # |X|
    neighbourhood: float        # |N_{rho_next}(X)|
    exponent: float             # |X| = (rho / rho_next)^exponent |N(X)|
    passed: bool

    def to_row(self):
        return {"round": self.round, "rho": self.rho, "rho_next": self.rho_next, "tubes": self.tubes,
                "area": self.area, "neighbourhood": self.neighbourhood, "exponent": self.exponent,
                "passed": self.passed}

@dataclass
class ProjectionIteration:
    area: float                 # |union pi_f(Y(T))| of the input
    eps: float
    scale: float
    rounds: list = field(default_factory=list)

    @property
    def final_rho(self):
        return self.rounds[-1].rho_next if self.rounds else self.scale

    @property
    def area_exponent(self):
        """x with area = delta^x"""
        return math.log(self.area) / math.log(self.scale) if self.area > 0 else math.inf

    def to_dict(self):
        return {"area": self.area, "eps": self.eps, "scale": self.scale,
                "area_exponent": self.area_exponent, "final_rho": self.final_rho,
                "rounds": [r.to_row() for r in self.rounds]}

def projected_union(f: ShadedFamily, slope: SlopeFunction) -> VoxelSet:
    occ = np.zeros(VoxelSet.empty(f.scale, PROJECTED_HALF_EXTENTS).shape, dtype=bool)
    for image in project_family(f, slope):
        occ |= image.occupancy
    return VoxelSet(occ, f.scale, PROJECTED_HALF_EXTENTS)

def next_scale(x: VoxelSet, rho, eps):
    """Dyadic rho' in (rho^(1-eps^2), 1) minimizing the area loss exponent,
    or 1 when that range holds no dyadic scale.

    :returns: (rho', |N_rho'(X)| in cells, exponent)
    """
    floor = rho ** (1 - eps ** 2)
    candidates = [r for r in dyadic_scales(rho, 1.0) if floor * (1 + 1e-12) < r < 1.0]
    best = None
    for r in candidates or [1.0]:
        grown = dilate_set(x, r).popcount
        exponent = math.log(grown / x.popcount) / math.log(r / rho)
        if best is None or exponent < best[2]:
            best = (r, grown, exponent)
    return best

def coarsen_family(f: ShadedFamily, rho) -> ShadedFamily:
    """Partitioning cover of rho-tubes shaded by N_rho of their buckets' shadings"""
    partition = build_partitioning_cover(f.solids, rho)
    if not partition.cover:
        raise ProjectionException(f"no partitioning cover at rho={rho:g}")
    cells, shadings = [], []
    for tube, bucket in zip(partition.cover, partition.buckets):
        c = solid_cells(tube, f.scale)
        near = dilate_set(f.subfamily(bucket).union(), rho).occupancy.reshape(-1)
        cells.append(c)
        shadings.append(c[near[c]])
    return ShadedFamily(partition.cover, shadings, f.scale, cells, check=False)

def projection_iteration(f: ShadedFamily, slope: SlopeFunction, config=None,
                         on_round=None) -> ProjectionIteration:
    """Run the single scale step until the scale reaches delta^(eps^2).

    :f: ShadedFamily of delta-tubes with non-empty union
    :slope: SlopeFunction at the grid scale
    :config: IterationConfig
    :on_round: callable receiving each IterationRound
    :raises ProjectionException: for an empty projected union

    """
    config = config or IterationConfig()
    delta = family_scale(f.solids)
    x = projected_union(f, slope)
    if x.popcount == 0:
        raise ProjectionException("empty projected union")
    result = ProjectionIteration(x.volume, config.eps, delta)
    current, rho = f, delta
    stop = delta ** (config.eps ** 2)
    for k in range(config.rounds()):
        if rho >= stop * (1 - 1e-12) or x.popcount == 0:
            break
        rho_next, grown, exponent = next_scale(x, rho, config.eps)
        passed = x.popcount * config.c0 >= (rho / rho_next) ** config.eps * grown
        step = IterationRound(k, rho, rho_next, len(current), x.volume, grown * x.cell_volume,
                              exponent, bool(passed))
        result.rounds.append(step)
        if on_round is not None:
            on_round(step)
        logger.info(f"projection round {k}: rho {rho:g} -> {rho_next:g}, exponent {exponent:.3f}")
        current = coarsen_family(current, rho_next)
        rho = rho_next
        x = projected_union(current, slope)
    return result
