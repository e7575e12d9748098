"""Regular shadings.

A shading Y of a solid S is regular when every ball centred on Y carries
at least its share of Y, at every dyadic radius r in [delta, 1]:

    |Y & B(x, r)| >= c |Y| |B(x, r) & S| / |S|,    c = 1 / (100 ln(1/delta))

Balls hold the cells whose centers lie within r of the center of x, the
convention of voxel.grid.ball_sums. Only cells of S are counted.
"""
import math

import numpy as np
from loguru import logger
from scipy import fft, signal
from scipy.spatial import cKDTree

from util.dyadic import dyadic_scales
from voxel.grid import VoxelSet, solid_cells

# Relative cost of one padded FFT cell against one neighbour visit
FFT_CELL_COST = 20

def regularity_constant(scale):
    return 1.0 / (100.0 * math.log(1.0 / scale))

def _ball_sums(coords, source, centers, radius):
    """Number of cells of coords[source] within radius (in cells) of every
    cell of coords[centers]; distances are between cell centers.

    Neighbour counting with a KD-tree, or an FFT convolution over the
    bounding box of coords, whichever visits fewer cells.
    """
    n_centers = int(centers.sum())
    n_source = int(source.sum())
    if n_centers == 0 or n_source == 0:
        return np.zeros(n_centers, dtype=np.int64)
    lo = coords.min(axis=0)
    extent = coords.max(axis=0) - lo + 1
    reach = np.minimum(int(math.floor(radius + 1e-9)), extent - 1)
    ball = 4.0 / 3.0 * math.pi * (radius + 1) ** 3
    direct = n_centers * min(n_source, ball)
    padded = np.prod([fft.next_fast_len(int(e + 2 * a)) for e, a in zip(extent, reach)])
    limit = radius * (1 + 1e-12)
    if direct <= FFT_CELL_COST * padded:
        tree = cKDTree(coords[source])
        return np.asarray(tree.query_ball_point(coords[centers], limit, return_length=True),
                          dtype=np.int64)
    grid = np.zeros(tuple(extent))
    grid[tuple((coords[source] - lo).T)] = 1.0
    axes = np.meshgrid(*[np.arange(-a, a + 1) for a in reach], indexing="ij", sparse=True)
    kernel = (sum(x * x for x in axes) <= limit * limit).astype(float)
    sums = signal.fftconvolve(grid, kernel, mode="same")
    return np.rint(sums[tuple((coords[centers] - lo).T)]).astype(np.int64)

class _Setup:
    """Cells of S, the shading as a mask over them, and |B(x, r) & S| for
    every cell of S and every dyadic radius."""

    def __init__(self, y: VoxelSet, solid):
        self.cells = solid_cells(solid, y.scale)
        self.alive = y.occupancy.reshape(-1)[self.cells]
        stray = y.popcount - int(self.alive.sum())
        if stray:
            logger.warning(f"{stray} shading cells lie outside the solid and are ignored")
        self.scale = y.scale
        self.c = regularity_constant(y.scale)
        self.coords = np.stack(np.unravel_index(self.cells, y.shape), axis=1)
        everywhere = np.ones(len(self.cells), dtype=bool)
        self.radii = [r / y.scale for r in dyadic_scales(y.scale)]
        self.solid_sums = [_ball_sums(self.coords, everywhere, everywhere, radius)
                           if len(self.cells) else np.zeros(0, dtype=np.int64)
                           for radius in self.radii]

    def violators(self, alive, level):
        """Mask over the cells of S: alive cells whose ball at the given
        radius level breaks the inequality."""
        bad = np.zeros(alive.shape, dtype=bool)
        y_total = int(alive.sum())
        if y_total == 0:
            return bad
        hits = _ball_sums(self.coords, alive, alive, self.radii[level])
        share = self.c * y_total * self.solid_sums[level][alive] / len(self.cells)
        bad[np.flatnonzero(alive)[hits < share]] = True
        return bad

def regularity_violations(y: VoxelSet, solid) -> VoxelSet:
    """Cells x of y whose ball B(x, r) breaks the regularity inequality at
    some dyadic r"""
    s = _Setup(y, solid)
    bad = np.zeros(s.alive.shape, dtype=bool)
    for level in range(len(s.radii)):
        bad |= s.violators(s.alive, level)
    return VoxelSet.from_indices(s.cells[bad], y.scale)

def is_regular(y: VoxelSet, solid) -> bool:
    return regularity_violations(y, solid).popcount == 0

def regularize(y: VoxelSet, solid) -> VoxelSet:
    """Delete the shading cells whose balls violate the inequality, finest
    radius first, and sweep again until no ball violates it.

    :y: shading, a subset of the rasterized solid
    :solid: Tube or Prism
    :returns: regular VoxelSet, a subset of y

    """
    s = _Setup(y, solid)
    if len(s.cells) == 0:
        return VoxelSet.empty(y.scale)
    alive = s.alive.copy()
    start = int(alive.sum())
    rounds = 0
    while True:
        deleted = False
        for level in range(len(s.radii)):
            bad = s.violators(alive, level)
            if bad.any():
                alive &= ~bad
                deleted = True
        rounds += 1
        if not deleted:
            break
    kept = int(alive.sum())
    if 2 * kept < start:
        logger.warning(f"regularize kept {kept} of {start} cells, less than half")
    logger.debug(f"regularize kept {kept} of {start} cells after {rounds} rounds")
    return VoxelSet.from_indices(s.cells[alive], y.scale)
