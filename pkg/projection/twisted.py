"""Twisted projections pi_f(x, y, z) = (x + f(z) y, z) and cinematic curves.

Projected sets live on the 2D grid of the same delta over
[-4,4] x [-1,1]; axis 0 is x' and axis 1 is z. A line
l_{a,b,c,d} = {(a + ct, b + dt, t)} maps onto the graph of
a + ct + f(t)(b + dt), the cinematic curve g_{a,b,d} sheared by ct.
"""
import math

import numpy as np
from loguru import logger

from geometry.solids import Tube
from shading.family import ShadedFamily
from voxel.grid import VoxelSet, grid_shape, cell_centers
from projection.slope import SlopeFunction
from util.exceptions import ProjectionException

PROJECTED_HALF_EXTENTS = (4, 1)

def _projection_map(scale, f: SlopeFunction):
    """Flat 2D cell of the image of every 3D cell center, -1 off the grid"""
    shape3 = grid_shape(scale, (1, 1, 1))
    shape2 = grid_shape(scale, PROJECTED_HALF_EXTENTS)
    c = cell_centers(scale)
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    xp = x + f(z) * y
    i = np.floor((xp + PROJECTED_HALF_EXTENTS[0]) / scale).astype(np.int64)
    j = np.floor((z + PROJECTED_HALF_EXTENTS[1]) / scale).astype(np.int64)
    inside = (i >= 0) & (i < shape2[0]) & (j >= 0) & (j < shape2[1])
    flat = np.full(shape3, -1, dtype=np.int64)
    flat[inside] = i[inside] * shape2[1] + j[inside]
    return flat.reshape(-1)

def _project_cells(cells, cell_map, scale):
    image = cell_map[cells]
    lost = int(np.count_nonzero(image < 0))
    if lost:
        logger.warning(f"{lost} cells project outside [-4,4] x [-1,1]")
    return VoxelSet.from_indices(np.unique(image[image >= 0]), scale, PROJECTED_HALF_EXTENTS)

def twisted_project(e: VoxelSet, f: SlopeFunction) -> VoxelSet:
    """Image of a 3D voxel set under pi_f.

    A 2D cell is set iff some occupied 3D cell center maps into it.

    :e: VoxelSet on [-1,1]^3
    :f: SlopeFunction at the grid scale, admissible unless test_mode
    :returns: VoxelSet on [-4,4] x [-1,1]
    :raises ProjectionException: for an inadmissible f or a 2D input

    """
    if e.ndim != 3:
        raise ProjectionException("twisted projection needs a 3D voxel set")
    f.check()
    return _project_cells(e.indices(), _projection_map(e.scale, f), e.scale)

def project_family(f: ShadedFamily, slope: SlopeFunction):
    """pi_f(Y(T)) for every member of a shaded family, as 2D VoxelSets"""
    slope.check()
    cell_map = _projection_map(f.scale, slope)
    return [_project_cells(y, cell_map, f.scale) for y in f.shadings]

def cinematic_values(t, a, b, d, f: SlopeFunction, c=0.0):
    """a + ct + b f(t) + d t f(t)"""
    ft = f(t)
    return a + c * t + b * ft + d * t * ft

def rasterize_cinematic(a, b, d, f: SlopeFunction, width=None, c=0.0) -> VoxelSet:
    """The width-neighbourhood g^width of the graph of g_{a,b,d} (sheared by ct).

    The curve is evaluated at step delta/2 over [-1,1]; a cell of row t is
    set when |x' - g(t)| <= width at some sample t of that row, x' being the
    cell center.

    :a, b, d: curve parameters in [-1,1]
    :f: SlopeFunction, its scale is the grid scale
    :width: thickening, default delta
    :c: shear, 0 for the cinematic family itself
    :returns: VoxelSet on [-4,4] x [-1,1]
    :raises ProjectionException: for parameters outside [-1,1]

    """
    if max(abs(a), abs(b), abs(d)) > 1 + 1e-12:
        raise ProjectionException(f"curve parameters outside [-1,1]: a={a}, b={b}, d={d}")
    scale = f.scale
    width = scale if width is None else width
    shape = grid_shape(scale, PROJECTED_HALF_EXTENTS)
    t = -1.0 + np.arange(int(round(4 / scale)) + 1) * (scale / 2)
    g = cinematic_values(t, a, b, d, f, c)
    row = np.minimum(np.floor((t + 1) / scale).astype(np.int64), shape[1] - 1)
    half = PROJECTED_HALF_EXTENTS[0]
    first = np.ceil((g - width + half) / scale - 0.5 - 1e-9).astype(np.int64)
    last = np.floor((g + width + half) / scale - 0.5 + 1e-9).astype(np.int64)
    span = int(math.ceil(2 * width / scale)) + 2
    cols = first[:, None] + np.arange(span)[None, :]
    keep = (cols <= last[:, None]) & (cols >= 0) & (cols < shape[0])
    rows = np.broadcast_to(row[:, None], cols.shape)
    occ = np.zeros(shape, dtype=bool)
    occ[cols[keep], rows[keep]] = True
    return VoxelSet(occ, scale, PROJECTED_HALF_EXTENTS)

def curve_length(a, b, d, f: SlopeFunction, c=0.0):
    """Arc length of the curve over [-1,1] by the trapezoid rule"""
    t = np.linspace(-1, 1, 4001)
    g = cinematic_values(t, a, b, d, f, c)
    return float(np.sum(np.hypot(np.diff(t), np.diff(g))))

def slice_areas(e: VoxelSet):
    """Occupied cells of every horizontal row (fixed z) of a 2D set"""
    if e.ndim != 2:
        raise ProjectionException("slice areas need a 2D voxel set")
    return e.occupancy.sum(axis=0)

def param_tube(a, b, c, d, scale, radius=None):
    """delta-tube around l_{a,b,c,d} over -1/2 <= t <= 1/2"""
    p0 = np.array([a - c / 2, b - d / 2, -0.5])
    p1 = np.array([a + c / 2, b + d / 2, 0.5])
    return Tube.from_endpoints(p0, p1, scale if radius is None else radius, scale)

def tube_params(tube: Tube):
    """(a, b, c, d) of the axis line of a tube written as l_{a,b,c,d}"""
    u = tube.direction
    if abs(u[2]) < 1e-9:
        raise ProjectionException("horizontal tubes have no (a, b, c, d) parameters")
    c, d = u[0] / u[2], u[1] / u[2]
    s = -tube.anchor[2] / u[2]
    a, b = tube.anchor[0] + s * u[0], tube.anchor[1] + s * u[1]
    return float(a), float(b), float(c), float(d)
