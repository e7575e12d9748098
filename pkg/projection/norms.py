"""Counting norms of families of 2D sets and the Hoelder chain.

For sets X_1 .. X_N on one grid with counting function n = sum chi_{X_i},

    sum |X_i|  <=  |union X_i|^(1/3) || n ||_{3/2}

and || n ||_{3/2} only grows when every X_i is replaced by a superset, so
curves g^{2 delta} containing the projected shadings bound it from above.
"""
from dataclasses import dataclass

import numpy as np

from util.exceptions import ProjectionException

def counting_field(sets):
    """Number of sets covering each cell"""
    sets = list(sets)
    if not sets:
        raise ProjectionException("no sets to count")
    first = sets[0]
    for e in sets[1:]:
        if e.scale != first.scale or e.half_extents != first.half_extents:
            raise ProjectionException("counting norm needs sets on a common grid")
    counts = np.zeros(first.shape, dtype=np.int64)
    for e in sets:
        counts += e.occupancy
    return counts

def lp_counting_norm(curves, p) -> float:
    """(sum_cells count^p * cell volume)^(1/p) of a list of VoxelSets.

    :curves: VoxelSets on a common grid
    :p: exponent, positive
    :raises ProjectionException: for p <= 0 or sets on different grids

    """
    if p <= 0:
        raise ProjectionException(f"counting norm exponent must be positive, got {p}")
    curves = list(curves)
    if not curves:
        return 0.0
    counts = counting_field(curves)
    total = float(np.sum(counts[counts > 0].astype(float) ** p)) * curves[0].cell_volume
    return total ** (1.0 / p)

@dataclass
class HolderChain:
    mass: float             # sum |pi_f(Y(T))|
    union: float            # |union pi_f(Y(T))|
    shading_norm: float     # || sum chi_{pi_f(Y(T))} ||_{3/2}
    curve_norm: float       # || sum chi_{g^{2 delta}} ||_{3/2}, None without curves
    shaded_volume: float = None     # sum |Y(T)| in 3D when known

    @property
    def holder_stage(self):
        return self.mass <= self.union ** (1 / 3) * self.shading_norm * (1 + 1e-9)

    @property
    def curve_stage(self):
        return self.curve_norm is None or self.shading_norm <= self.curve_norm * (1 + 1e-9)

    @property
    def holds(self):
        return self.holder_stage and self.curve_stage

    @property
    def union_lower_bound(self):
        """(mass / norm)^3, the area the chain forces on the union"""
        norm = self.curve_norm if self.curve_norm is not None else self.shading_norm
        return (self.mass / norm) ** 3 if norm else 0.0

    def to_dict(self):
        return {"mass": self.mass, "union": self.union, "shading_norm": self.shading_norm,
                "curve_norm": self.curve_norm, "shaded_volume": self.shaded_volume,
                "holds": self.holds}

def holder_chain(projected, curves=None, shaded_volume=None) -> HolderChain:
    """Measure both stages of the chain.

    :projected: list of 2D VoxelSets pi_f(Y(T))
    :curves: matching list of VoxelSets containing them (optional)
    :shaded_volume: sum |Y(T)| of the 3D shadings, recorded only

    """
    projected = list(projected)
    if not projected:
        raise ProjectionException("empty family")
    counts = counting_field(projected)
    cell = projected[0].cell_volume
    mass = float(counts.sum()) * cell
    union = float(np.count_nonzero(counts)) * cell
    curve_norm = None if curves is None else lp_counting_norm(curves, 1.5)
    return HolderChain(mass, union, lp_counting_norm(projected, 1.5), curve_norm, shaded_volume)
