"""Plane spread and line spread fields.

At a cell x the plane spread is the largest angle between the planes of two
prisms whose shadings contain x, measured between normals; the line spread
is the same for axis lines. Cells met by at most one solid get 0.
"""
import math
from enum import Enum
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy import sparse

from geometry.solids import Tube, Prism
from shading.family import ShadedFamily
from prisms.overlap import incidence_matrix
from util.exceptions import PrismLabException

class SpreadKind(Enum):
    PLANE = "plane"
    LINE = "line"

@dataclass
class SpreadField:
    kind: SpreadKind
    values: np.ndarray          # angle per cell of the [-1,1]^3 grid
    scale: float
    threshold_meaningful: float # angles below this are noise: s/t for planes, t for lines

    @property
    def max(self):
        return float(self.values.max(initial=0.0))

    def band(self, theta):
        """Mask of cells with theta <= spread < 2 theta"""
        return (self.values >= theta) & (self.values < 2 * theta)

    def band_of(self, cells, theta):
        flat = self.values.reshape(-1)[cells]
        return cells[(flat >= theta) & (flat < 2 * theta)]

    def below(self, cells, theta):
        return cells[self.values.reshape(-1)[cells] < theta]

def _orientations(solids, kind):
    if kind is SpreadKind.PLANE:
        if not all(isinstance(s, Prism) for s in solids):
            raise PrismLabException("plane spread is defined for prism families only")
        return np.stack([s.normal for s in solids])
    if all(isinstance(s, Prism) for s in solids):
        return np.stack([s.axis for s in solids])
    if all(isinstance(s, Tube) for s in solids):
        return np.stack([s.direction for s in solids])
    raise PrismLabException("line spread needs a family of tubes or of prisms")

def _meaningful(solids, kind):
    if isinstance(solids[0], Tube):
        return max(2 * t.radius for t in solids)
    ratio = max(p.s / p.t for p in solids) if kind is SpreadKind.PLANE else max(p.t for p in solids)
    return float(ratio)

def spread_field(f: ShadedFamily, kind: SpreadKind, use_shading=True) -> SpreadField:
    """Per cell maximal pairwise angle between incident solids.

    :f: ShadedFamily of prisms (or of tubes for the line spread)
    :kind: SpreadKind
    :use_shading: incidence through Y(S) when True, through S itself otherwise
    :returns: SpreadField with values in [0, pi/2]

    """
    if len(f) == 0:
        raise PrismLabException("empty family")
    dirs = _orientations(f.solids, kind)
    cells = f.shadings if use_shading else f.cells
    ncells = int(np.prod(f.shape))
    values = np.zeros(ncells)
    m = incidence_matrix(cells, ncells)
    pairs = sparse.triu(m @ m.T, k=1).tocoo()
    if pairs.nnz:
        cos = np.abs(np.einsum("ij,ij->i", dirs[pairs.row], dirs[pairs.col]))
        angles = np.arccos(np.minimum(cos, 1.0))
        for i, j, a in zip(pairs.row, pairs.col, angles):
            if a == 0:
                continue
            common = np.intersect1d(cells[i], cells[j], assume_unique=True)
            np.maximum.at(values, common, a)
    logger.debug(f"{kind.value} spread over {pairs.nnz} overlapping pairs, max {values.max(initial=0):.4f}")
    return SpreadField(kind, values.reshape(f.shape), f.scale, _meaningful(f.solids, kind))

def spread_bands(field: SpreadField, cells, theta_min, theta_max=math.pi / 2):
    """Dyadic spread bands over the given cells.

    The lowest band is [0, 2 theta_min); the others are [theta, 2 theta) for
    theta = 2 theta_min, 4 theta_min, ... up to theta_max, the last one
    open-ended.

    :returns: list of (theta, mask over cells)
    """
    values = field.values.reshape(-1)[cells]
    thetas = [theta_min]
    while thetas[-1] * 2 <= theta_max:
        thetas.append(thetas[-1] * 2)
    bands = []
    for k, theta in enumerate(thetas):
        lo = 0.0 if k == 0 else theta
        hi = math.inf if k == len(thetas) - 1 else 2 * theta
        bands.append((theta, (values >= lo) & (values < hi)))
    return bands
