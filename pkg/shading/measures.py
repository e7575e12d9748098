from dataclasses import dataclass

import numpy as np
from loguru import logger

from shading.family import ShadedFamily
from util.dyadic import pigeonhole_loss
from util.exceptions import ShadingException

@dataclass
class MultiplicityField:
    """Per cell count #{S : p in Y(S)} and its dyadic band summary"""
    counts: np.ndarray          # int grid over [-1,1]^3
    scale: float
    max: int
    band_cells: dict            # band i -> number of cells with count in [2^i, 2^(i+1))
    band_mass: dict             # band i -> sum of counts over those cells

    @property
    def total(self):
        """Sum of counts, i.e. sum |Y(S)| in cells."""
        return int(self.counts.sum())

def density(f: ShadedFamily):
    """Aggregate and per solid shading density.

    :f: non-empty ShadedFamily
    :returns: (sum |Y| / sum |S|, list of |Y(S)| / |S|)

    """
    if len(f) == 0:
        raise ShadingException("density of an empty family")
    shaded = f.shading_sizes()
    sizes = f.solid_sizes()
    if sizes.sum() == 0:
        raise ShadingException("family occupies no cells of the domain")
    per_solid = np.divide(shaded, sizes, out=np.zeros(len(f)), where=sizes > 0)
    return float(shaded.sum() / sizes.sum()), per_solid.tolist()

def is_uniformly_dense(f: ShadedFamily, tau: float) -> bool:
    _, per_solid = density(f)
    return min(per_solid) >= tau

def _bands(counts):
    nz = counts[counts > 0]
    bands = np.floor(np.log2(nz)).astype(int)
    cells = {int(b): int(n) for b, n in zip(*np.unique(bands, return_counts=True))}
    mass = {int(b): int(nz[bands == b].sum()) for b in cells}
    return cells, mass

def multiplicity(f: ShadedFamily) -> MultiplicityField:
    """Exact per cell multiplicity of the shadings"""
    ncells = int(np.prod(f.shape))
    flat = np.concatenate(f.shadings) if len(f) else np.empty(0, dtype=np.int64)
    counts = np.bincount(flat, minlength=ncells).reshape(f.shape)
    band_cells, band_mass = _bands(counts.reshape(-1))
    return MultiplicityField(counts, f.scale, int(counts.max(initial=0)), band_cells, band_mass)

def pigeonhole_uniform(f: ShadedFamily):
    """Restrict every shading to the cells whose multiplicity lies in the
    dyadic band [mu, 2 mu) carrying the most shaded mass.

    :f: ShadedFamily with positive density
    :returns: (mu, refined ShadedFamily)
    :raises ShadingException: for a family with no shaded cell

    """
    field = multiplicity(f)
    if field.total == 0:
        raise ShadingException("cannot pigeonhole a family of zero density")
    best = max(sorted(field.band_mass), key=lambda b: field.band_mass[b])
    mu = 2 ** best
    counts = field.counts.reshape(-1)
    refined = f.with_shadings([y[(counts[y] >= mu) & (counts[y] < 2 * mu)] for y in f.shadings])
    retained = refined.mass_cells / f.mass_cells
    logger.debug(f"pigeonholed multiplicity band [{mu}, {2 * mu}) keeps {retained:.3f} of the mass")
    if retained < pigeonhole_loss(len(f)) - 1e-12:
        raise ShadingException("pigeonholing lost more mass than the band count allows")
    return mu, refined
