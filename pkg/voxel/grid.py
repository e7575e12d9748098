import math
from enum import Enum

import numpy as np
from loguru import logger
from scipy import ndimage, signal

from geometry.solids import Tube, Prism, Ball
from geometry.containment import point_segment_distance
from util.dyadic import scale_exponent
from util.exceptions import VoxelException

# Supported grid depths: delta = 2^-k
MIN_K = 2
MAX_K = 12

# Ball counts go through an FFT convolution up to this radius (in cells)
FFT_RADIUS_CELLS = 8

# Cells kept per axis before tube rasterization switches to a bounding box scan
_TUBE_REACH_LIMIT = 4

class CellMembership(Enum):
    """How a solid decides which cells it occupies.

    CENTER: the cell center lies in the solid
    INTERSECT: the cell meets the solid (solid grown by half a cell diagonal)
    """
    CENTER = 0
    INTERSECT = 1

def grid_shape(scale, half_extents):
    return tuple(int(round(2 * h / scale)) for h in half_extents)

def check_scale(scale):
    k = scale_exponent(scale)
    if not MIN_K <= k <= MAX_K:
        raise VoxelException(f"grid depth k={k} outside [{MIN_K}, {MAX_K}]")
    return k

class VoxelSet:
    """Immutable occupancy grid of cell size delta over the box
    prod [-h_i, h_i]. The default box is [-1,1]^3; twisted projections use
    the 2D box [-4,4] x [-1,1]."""

    def __init__(self, occupancy, scale, half_extents=None):
        check_scale(scale)
        occupancy = np.array(occupancy, dtype=bool)
        if half_extents is None:
            half_extents = (1,) * occupancy.ndim
        half_extents = tuple(int(h) for h in half_extents)
        if occupancy.shape != grid_shape(scale, half_extents):
            raise VoxelException(f"occupancy shape {occupancy.shape} does not match "
                                 f"grid {grid_shape(scale, half_extents)} at scale {scale}")
        occupancy.setflags(write=False)
        self.occupancy = occupancy
        self.scale = float(scale)
        self.half_extents = half_extents
        self.popcount = int(np.count_nonzero(occupancy))

    @staticmethod
    def empty(scale, half_extents=(1, 1, 1)):
        return VoxelSet(np.zeros(grid_shape(scale, half_extents), dtype=bool), scale, half_extents)

    @staticmethod
    def full(scale, half_extents=(1, 1, 1)):
        return VoxelSet(np.ones(grid_shape(scale, half_extents), dtype=bool), scale, half_extents)

    @staticmethod
    def from_indices(flat, scale, half_extents=(1, 1, 1)):
        occ = np.zeros(grid_shape(scale, half_extents), dtype=bool)
        occ.reshape(-1)[np.asarray(flat, dtype=np.int64)] = True
        return VoxelSet(occ, scale, half_extents)

    @property
    def k(self):
        return scale_exponent(self.scale)

    @property
    def ndim(self):
        return self.occupancy.ndim

    @property
    def shape(self):
        return self.occupancy.shape

    @property
    def cell_volume(self):
        return self.scale ** self.ndim

    @property
    def volume(self):
        return self.popcount * self.cell_volume

    def indices(self):
        return np.flatnonzero(self.occupancy)

    def centers(self, axis):
        return cell_centers(self.scale, self.half_extents[axis])

    def occupied_centers(self):
        idx = np.nonzero(self.occupancy)
        return np.stack([-self.half_extents[a] + (idx[a] + 0.5) * self.scale
                         for a in range(self.ndim)], axis=-1)

    def _check_compatible(self, other):
        if other.scale != self.scale or other.half_extents != self.half_extents:
            raise VoxelException("voxel sets live on different grids")

    def __or__(self, other):
        self._check_compatible(other)
        return VoxelSet(self.occupancy | other.occupancy, self.scale, self.half_extents)

    def __and__(self, other):
        self._check_compatible(other)
        return VoxelSet(self.occupancy & other.occupancy, self.scale, self.half_extents)

    def __sub__(self, other):
        self._check_compatible(other)
        return VoxelSet(self.occupancy & ~other.occupancy, self.scale, self.half_extents)

    def __eq__(self, other):
        if not isinstance(other, VoxelSet):
            return NotImplemented
        return (self.scale == other.scale and self.half_extents == other.half_extents
                and np.array_equal(self.occupancy, other.occupancy))

    def __hash__(self):
        return hash((self.scale, self.half_extents, self.popcount))

    def issubset(self, other):
        self._check_compatible(other)
        return not np.any(self.occupancy & ~other.occupancy)

    def __repr__(self):
        return f"VoxelSet(k={self.k}, shape={self.shape}, popcount={self.popcount})"

def cell_centers(scale, half_extent=1):
    n = int(round(2 * half_extent / scale))
    return -half_extent + (np.arange(n) + 0.5) * scale

def _cell_of(points, scale, half):
    return np.floor((points + half) / scale).astype(np.int64)

def _flatten(idx, shape):
    """Flat indices of in-grid rows of idx (M, 3); out of grid rows dropped."""
    inside = np.all((idx >= 0) & (idx < np.asarray(shape)), axis=1)
    return np.ravel_multi_index(tuple(idx[inside].T), shape)

def _bbox_cells(lo, hi, scale, half, shape):
    """Index ranges of cells whose centers may lie in [lo, hi], clipped."""
    first = np.maximum(np.ceil((lo + half) / scale - 0.5) - 1, 0).astype(int)
    last = np.minimum(np.floor((hi + half) / scale - 0.5) + 1, np.asarray(shape) - 1).astype(int)
    return first, last

def _tube_cells(tube, scale, pad, half, shape):
    radius = tube.radius + pad
    p0, p1 = tube.endpoints
    reach = int(math.ceil(radius / scale)) + 1
    if reach > _TUBE_REACH_LIMIT:
        lo = np.minimum(p0, p1) - radius
        hi = np.maximum(p0, p1) + radius
        first, last = _bbox_cells(lo, hi, scale, half, shape)
        if np.any(last < first):
            return np.empty(0, dtype=np.int64)
        grids = np.meshgrid(*[np.arange(f, l + 1) for f, l in zip(first, last)], indexing="ij")
        cand = np.stack([g.reshape(-1) for g in grids], axis=1)
    else:
        n = int(math.ceil(tube.length / (scale / 2))) + 1
        lam = np.linspace(0.0, 1.0, n)
        samples = p0 + lam[:, None] * (p1 - p0)
        base = _cell_of(samples, scale, half)
        r = np.arange(-reach, reach + 1)
        offsets = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        flat = np.unique(_flatten((base[:, None, :] + offsets[None]).reshape(-1, 3), shape))
        cand = np.stack(np.unravel_index(flat, shape), axis=1)
    centers = -half + (cand + 0.5) * scale
    keep = point_segment_distance(centers, p0, p1) <= radius * (1 + 1e-12) + 1e-15
    return np.sort(_flatten(cand[keep], shape))

def _prism_cells(prism, scale, pad, half, shape):
    hd = np.asarray(prism.half_dims) + pad
    corners = prism.center + (np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1)
                                        for k in (-1, 1)]) * hd) @ prism.frame
    first, last = _bbox_cells(corners.min(axis=0), corners.max(axis=0), scale, half, shape)
    if np.any(last < first):
        return np.empty(0, dtype=np.int64)
    xs = -half[0] + (np.arange(first[0], last[0] + 1) + 0.5) * scale
    ys = -half[1] + (np.arange(first[1], last[1] + 1) + 0.5) * scale
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gx = gx.reshape(-1)
    gy = gy.reshape(-1)
    # For each frame axis a: |a.(p - c)| <= h is a z-interval on every column
    zlo = np.full(gx.shape, -np.inf)
    zhi = np.full(gx.shape, np.inf)
    ok = np.ones(gx.shape, dtype=bool)
    for a, h in zip(prism.frame, hd):
        base = a[0] * (gx - prism.center[0]) + a[1] * (gy - prism.center[1]) - a[2] * prism.center[2]
        slack = h * (1 + 1e-12) + 1e-15
        if abs(a[2]) < 1e-14:
            ok &= np.abs(base) <= slack
        else:
            lo = (-slack - base) / a[2]
            hi = (slack - base) / a[2]
            zlo = np.maximum(zlo, np.minimum(lo, hi))
            zhi = np.minimum(zhi, np.maximum(lo, hi))
    kzlo = np.maximum(np.ceil((zlo + half[2]) / scale - 0.5), first[2])
    kzhi = np.minimum(np.floor((zhi + half[2]) / scale - 0.5), last[2])
    ok &= kzhi >= kzlo
    ix = np.repeat(np.arange(first[0], last[0] + 1), last[1] - first[1] + 1)[ok]
    iy = np.tile(np.arange(first[1], last[1] + 1), last[0] - first[0] + 1)[ok]
    kzlo = kzlo[ok].astype(np.int64)
    counts = (kzhi[ok] - kzlo + 1).astype(np.int64)
    if counts.sum() == 0:
        return np.empty(0, dtype=np.int64)
    col = np.repeat(np.arange(len(counts)), counts)
    start = np.cumsum(counts) - counts
    iz = kzlo[col] + (np.arange(counts.sum()) - start[col])
    cand = np.stack([ix[col], iy[col], iz], axis=1)
    return np.sort(_flatten(cand, shape))

def _ball_cells(ball, scale, pad, half, shape):
    radius = ball.radius + pad
    first, last = _bbox_cells(ball.center - radius, ball.center + radius, scale, half, shape)
    if np.any(last < first):
        return np.empty(0, dtype=np.int64)
    grids = np.meshgrid(*[np.arange(f, l + 1) for f, l in zip(first, last)], indexing="ij")
    cand = np.stack([g.reshape(-1) for g in grids], axis=1)
    centers = -half + (cand + 0.5) * scale
    keep = np.linalg.norm(centers - ball.center, axis=1) <= radius * (1 + 1e-12)
    return np.sort(_flatten(cand[keep], shape))

def solid_cells(solid, scale, membership=CellMembership.CENTER, half_extents=(1, 1, 1)):
    """Sorted flat indices of the grid cells a solid occupies.

    :solid: Tube, Prism or Ball
    :scale: cell size delta (power of 2)
    :membership: CellMembership rule
    :returns: int64 array of flat cell indices (solid clipped to the domain)

    """
    check_scale(scale)
    if scale > solid.thinnest * (1 + 1e-12):
        logger.warning(f"sub-resolution solid: grid scale {scale} exceeds thinnest "
                       f"half dimension {solid.thinnest:g}")
    half = np.asarray(half_extents, dtype=float)
    shape = grid_shape(scale, half_extents)
    pad = math.sqrt(3) * scale / 2 if membership is CellMembership.INTERSECT else 0.0
    if isinstance(solid, Tube):
        return _tube_cells(solid, scale, pad, half, shape)
    if isinstance(solid, Prism):
        return _prism_cells(solid, scale, pad, half, shape)
    if isinstance(solid, Ball):
        return _ball_cells(solid, scale, pad, half, shape)
    raise VoxelException(f"cannot rasterize {type(solid).__name__}")

def rasterize(solid, grid_scale, membership=CellMembership.CENTER):
    """VoxelSet of a single solid: a cell is set iff its center lies in it."""
    return VoxelSet.from_indices(solid_cells(solid, grid_scale, membership), grid_scale)

def rasterize_family(solids, grid_scale, membership=CellMembership.CENTER):
    """Union of the rasterized solids (bitwise OR, order independent)."""
    occ = np.zeros(grid_shape(grid_scale, (1, 1, 1)), dtype=bool)
    flat = occ.reshape(-1)
    for solid in solids:
        flat[solid_cells(solid, grid_scale, membership)] = True
    return VoxelSet(occ, grid_scale)

def dilation_cells(scale, radius):
    if radius < scale * (1 - 1e-12):
        raise VoxelException(f"sub-grid dilation: radius {radius} < delta {scale}")
    return int(math.ceil(radius / scale - 1e-9))

def _dilate_array(occ, cells):
    out = occ.astype(np.uint8)
    for axis in range(occ.ndim):
        out = ndimage.maximum_filter1d(out, size=2 * cells + 1, axis=axis,
                                       mode="constant", cval=0)
    return out.astype(bool)

def dilate_set(e: VoxelSet, radius: float) -> VoxelSet:
    """Chebyshev neighbourhood N_radius(e): dilation by ceil(radius/delta)
    cells along every axis, clipped to the domain.

    :e: VoxelSet
    :radius: dilation radius, at least delta
    :returns: VoxelSet containing e
    :raises VoxelException: "sub-grid dilation" when radius < delta

    """
    cells = dilation_cells(e.scale, radius)
    if e.popcount == 0:
        return e
    return VoxelSet(_dilate_array(e.occupancy, cells), e.scale, e.half_extents)

def covering_number(e: VoxelSet, box_scale: float) -> int:
    """Number of grid aligned dyadic boxes of side box_scale meeting e."""
    scale_exponent(box_scale)
    if box_scale < e.scale * (1 - 1e-12):
        raise VoxelException(f"box scale {box_scale} below grid scale {e.scale}")
    b = int(round(box_scale / e.scale))
    if any(n % b for n in e.shape):
        raise VoxelException(f"box scale {box_scale} does not tile the domain")
    shape = []
    for n in e.shape:
        shape.extend([n // b, b])
    blocks = e.occupancy.reshape(shape)
    return int(np.count_nonzero(blocks.any(axis=tuple(range(1, 2 * e.ndim, 2)))))

def covering_profile(e: VoxelSet):
    """(rho, covering number) for every dyadic rho from delta up to 1."""
    profile = []
    rho = e.scale
    while rho <= 1.0:
        profile.append((rho, covering_number(e, rho)))
        rho *= 2
    return profile

def ball_offsets(scale, r, ndim=3):
    """Cell offsets whose centers lie within r of a cell center."""
    reach = int(math.floor(r / scale + 1e-9))
    rng = np.arange(-reach, reach + 1)
    grid = np.stack(np.meshgrid(*([rng] * ndim), indexing="ij"), axis=-1).reshape(-1, ndim)
    keep = np.linalg.norm(grid, axis=1) * scale <= r * (1 + 1e-12)
    return grid[keep]

def ball_kernel(scale, r, ndim=3):
    reach = int(math.floor(r / scale + 1e-9))
    kernel = np.zeros((2 * reach + 1,) * ndim)
    offsets = ball_offsets(scale, r, ndim) + reach
    kernel[tuple(offsets.T)] = 1.0
    return kernel

def snap_to_cell(points, scale, half_extents=(1, 1, 1)):
    """Index of the cell containing each point, clipped to the grid."""
    half = np.asarray(half_extents, dtype=float)
    shape = np.asarray(grid_shape(scale, half_extents))
    idx = _cell_of(np.atleast_2d(points), scale, half)
    return np.clip(idx, 0, shape - 1)

def _check_ball_scales(scale, r, rho):
    if r < scale * (1 - 1e-12):
        raise VoxelException(f"ball radius {r} below grid resolution {scale}")
    if rho < scale * (1 - 1e-12) or rho > r * (1 + 1e-12):
        raise VoxelException(f"need delta <= rho <= r, got rho={rho}, r={r}")

def ball_sums(values, scale, centers, r, half_extents=(1, 1, 1)):
    """Sum of a grid array over the cells of B(c, r), for every center.

    Centers are snapped to the cell containing them; the ball holds the
    cells whose centers lie within r and is clipped to the domain.
    """
    values = np.asarray(values)
    idx = snap_to_cell(centers, scale, half_extents)
    offsets = ball_offsets(scale, r, values.ndim)
    reach = offsets.max() if len(offsets) else 0
    if reach <= FFT_RADIUS_CELLS:
        kernel = ball_kernel(scale, r, values.ndim)
        sums = signal.fftconvolve(values.astype(float), kernel, mode="same")
        return np.rint(sums[tuple(idx.T)]).astype(np.int64)
    shape = np.asarray(values.shape)
    out = np.empty(len(idx), dtype=np.int64)
    for n, cell in enumerate(idx):
        cells = cell + offsets
        cells = cells[np.all((cells >= 0) & (cells < shape), axis=1)]
        out[n] = int(values[tuple(cells.T)].sum())
    return out

def ball_set(center, r, scale, half_extents=(1, 1, 1)) -> VoxelSet:
    """Cells of B(center, r) under the ball_sums convention"""
    shape = np.asarray(grid_shape(scale, half_extents))
    cell = snap_to_cell(center, scale, half_extents)[0]
    cells = cell + ball_offsets(scale, r, len(shape))
    cells = cells[np.all((cells >= 0) & (cells < shape), axis=1)]
    occ = np.zeros(tuple(shape), dtype=bool)
    occ[tuple(cells.T)] = True
    return VoxelSet(occ, scale, half_extents)

def ball_counts(e: VoxelSet, centers, r: float, rho: float, dilated=None):
    """Cells of N_rho(e) and of the domain inside B(c, r), for every center.

    Returns (hits, totals) integer arrays.
    """
    _check_ball_scales(e.scale, r, rho)
    if dilated is None:
        dilated = dilate_set(e, rho)
    hits = ball_sums(dilated.occupancy, e.scale, centers, r, e.half_extents)
    totals = ball_sums(np.ones(e.shape, dtype=np.int64), e.scale, centers, r, e.half_extents)
    return hits, totals

def ball_density(e: VoxelSet, center, r: float, rho: float) -> float:
    """|B(center, r) & N_rho(e)| / |B(center, r)| measured in cells.

    The ball is taken around the cell containing center and clipped to the
    domain; the neighbourhood is computed on a local crop only.
    """
    _check_ball_scales(e.scale, r, rho)
    cells = dilation_cells(e.scale, rho)
    reach = int(math.floor(r / e.scale + 1e-9))
    cell = snap_to_cell(center, e.scale, e.half_extents)[0]
    shape = np.asarray(e.shape)
    lo = np.maximum(cell - reach - cells, 0)
    hi = np.minimum(cell + reach + cells + 1, shape)
    crop = e.occupancy[tuple(slice(a, b) for a, b in zip(lo, hi))]
    local = _dilate_array(crop, cells) if crop.any() else crop
    offsets = ball_offsets(e.scale, r, e.ndim)
    ball = cell + offsets
    ball = ball[np.all((ball >= 0) & (ball < shape), axis=1)]
    hits = np.count_nonzero(local[tuple((ball - lo).T)])
    return hits / len(ball)
