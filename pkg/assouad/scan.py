"""Density exponent zeta and the discretized Assouad scan.

For a ball B of radius r and a scale rho <= r, zeta is the number with
|B & N_rho(e)| = (rho/r)^zeta |B|. A small zeta at well separated scales
rho << r means e looks nearly three dimensional between rho and r.
"""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from voxel.grid import VoxelSet, dilate_set, ball_counts, ball_density, cell_centers
from util.dyadic import dyadic_scales
from util.exceptions import AssouadException

@dataclass
class ScanResult:
    zeta: float
    rho: float
    r: float
    center: np.ndarray
    density: float

    @property
    def separation(self):
        return self.r / self.rho

    @property
    def dimension_witnessed(self):
        return 3.0 - self.zeta

    def to_dict(self):
        return {"zeta": self.zeta, "rho": self.rho, "r": self.r,
                "center": np.asarray(self.center).tolist(), "density": self.density,
                "separation": self.separation, "dimension_witnessed": self.dimension_witnessed}

def zeta_of(density, rho, r):
    value = math.log(density) / math.log(rho / r)
    return value if value != 0 else 0.0

def zeta(e: VoxelSet, center, r, rho):
    """Density exponent of e in B(center, r) at scale rho.

    :raises AssouadException: "undefined zeta" when B misses N_rho(e), or
        when rho is not below r

    """
    if not rho < r:
        raise AssouadException(f"zeta needs rho < r, got rho={rho}, r={r}")
    density = ball_density(e, center, r, rho)
    if density == 0:
        raise AssouadException("undefined zeta")
    return zeta_of(density, rho, r)

def net_centers(scale, r, half_extents=(1, 1, 1)):
    """Cell centers on an r/2 net, in lexicographic order"""
    step = max(1, int(math.floor(r / 2 / scale + 1e-9)))
    axes = []
    for h in half_extents:
        centers = cell_centers(scale, h)
        axes.append(centers[step // 2::step])
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grid], axis=1)

def scale_pairs(scale, min_separation):
    """Dyadic (rho, r) with delta <= rho, r >= A rho and r <= 1, by rho then r"""
    for rho in dyadic_scales(scale, 1.0):
        for r in dyadic_scales(min_separation * rho, 1.0):
            yield rho, r

def scan_candidates(e: VoxelSet, min_separation):
    """Every net ball meeting N_rho(e), per scale pair.

    :returns: generator of (rho, r, centers, densities, zetas)
    """
    if e.popcount == 0:
        raise AssouadException("cannot scan an empty set")
    if min_separation < 2:
        raise AssouadException(f"scale separation must be at least 2, got {min_separation}")
    dilated = {}
    for rho, r in scale_pairs(e.scale, min_separation):
        if rho not in dilated:
            dilated[rho] = dilate_set(e, rho)
        centers = net_centers(e.scale, r, e.half_extents)
        hits, totals = ball_counts(e, centers, r, rho, dilated[rho])
        keep = hits > 0
        densities = hits[keep] / totals[keep]
        zetas = np.log(densities) / math.log(rho / r)
        yield rho, r, centers[keep], densities, zetas + 0.0

def assouad_scan(e: VoxelSet, min_separation) -> ScanResult:
    """Minimum zeta over dyadic rho, dyadic r >= A rho and net ball centers.

    Ties keep the first witness in (rho, r, center) order.

    :e: non-empty VoxelSet
    :min_separation: A >= 2
    :returns: ScanResult
    :raises AssouadException: for an empty set or A < 2

    """
    best = None
    pairs = 0
    for rho, r, centers, densities, zetas in scan_candidates(e, min_separation):
        pairs += 1
        if len(zetas) == 0:
            continue
        i = int(np.argmin(zetas))
        if best is None or zetas[i] < best.zeta:
            best = ScanResult(float(zetas[i]), rho, r,
                              centers[i], float(densities[i]))
    if best is None:
        raise AssouadException(f"no scale pair with separation {min_separation} fits the domain")
    logger.debug(f"assouad scan over {pairs} scale pairs: zeta={best.zeta:.4f} "
                 f"at rho={best.rho:g}, r={best.r:g}")
    return best
