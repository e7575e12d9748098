"""L2 overlap of solid families and the Cauchy-Schwarz chain.

For a family with union E of its shadings,

    sum |Y(R)|  <=  sum |R & E|  <=  |E|^(1/2) || sum chi_R ||_2

and everything is counted in grid cells, so both stages are exact integer
inequalities.
"""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from shading.family import ShadedFamily
from voxel.grid import solid_cells, grid_shape
from util.dyadic import log2_inverse
from util.exceptions import PrismLabException

def incidence_matrix(cells, ncells):
    """Sparse solids x cells 0/1 matrix from per solid flat cell arrays"""
    rows = np.repeat(np.arange(len(cells)), [len(c) for c in cells])
    cols = np.concatenate(cells) if len(cells) else np.empty(0, dtype=np.int64)
    data = np.ones(len(cols), dtype=np.int64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(cells), ncells))

def overlap_matrix(cells, ncells):
    """Pairwise intersection sizes |R & R'| in cells, as a sparse matrix"""
    m = incidence_matrix(cells, ncells)
    return (m @ m.T).tocsr()

def l2_overlap_cells(cells, ncells) -> int:
    """sum over ordered pairs of |R & R'|, i.e. || sum chi_R ||_2^2 in cells"""
    return int(overlap_matrix(cells, ncells).sum())

def l2_overlap(solids, scale) -> float:
    """|| sum chi_R ||_2^2 of a multiset of solids rasterized at scale.

    :solids: list of Prism (or any rasterizable solid)
    :scale: grid delta
    :returns: the overlap as a volume

    """
    solids = list(solids)
    if not solids:
        raise PrismLabException("empty family")
    cells = [solid_cells(s, scale) for s in solids]
    ncells = int(np.prod(grid_shape(scale, (1, 1, 1))))
    return l2_overlap_cells(cells, ncells) * scale ** 3

@dataclass
class CauchySchwarzChain:
    shaded: int         # sum |Y(R)|
    incidence: int      # sum |R & E|
    union: int          # |E|
    l2: int             # || sum chi_R ||_2^2
    scale: float

    @property
    def first_stage(self):
        return self.shaded <= self.incidence

    @property
    def second_stage(self):
        return self.incidence ** 2 <= self.union * self.l2

    @property
    def holds(self):
        return self.first_stage and self.second_stage

    @property
    def union_bound_cells(self):
        """Lower bound (sum |Y|)^2 / ||sum chi_R||^2 on |E| in cells"""
        return self.shaded ** 2 / self.l2 if self.l2 else 0.0

    def to_dict(self):
        return {"shaded": self.shaded, "incidence": self.incidence, "union": self.union,
                "l2": self.l2, "scale": self.scale, "holds": self.holds}

def cauchy_schwarz_chain(f: ShadedFamily) -> CauchySchwarzChain:
    """Both stages of the chain for a shaded family, in exact integers"""
    if len(f) == 0:
        raise PrismLabException("empty family")
    ncells = int(np.prod(f.shape))
    union = f.union().occupancy.reshape(-1)
    incidence = sum(int(np.count_nonzero(union[c])) for c in f.cells)
    return CauchySchwarzChain(shaded=int(f.mass_cells), incidence=int(incidence),
                              union=int(np.count_nonzero(union)),
                              l2=l2_overlap_cells(f.cells, ncells), scale=f.scale)

def union_volume_lower_bound(f: ShadedFamily) -> float:
    """|union Y(R)| >= (sum |Y(R)|)^2 / || sum chi_R ||_2^2, as a volume"""
    return cauchy_schwarz_chain(f).union_bound_cells * f.scale ** 3

def slab_union_floor(error_constant, scale, c=8.0):
    """K^-3 / (c log2(1/delta)): the union volume a K-dense shading of a
    family of delta-thin full slabs with convex Wolff error K must reach"""
    return error_constant ** -3 / (c * log2_inverse(scale))
