"""Point set generators."""
import math

import numpy as np
from loguru import logger

from projection.points import ParamPointSet
from util.dyadic import is_dyadic
from util.exceptions import GeneratorException

def tile_count(rho, s, n):
    """Cells per axis: the cell side 1/m is at most rho^(s/n) and at least rho"""
    return int(math.ceil(rho ** (-s / n) - 1e-9))

def gen_tiled_pointset(base: ParamPointSet, s, rho) -> ParamPointSet:
    """Copies of a set living in one rho-cube, one per cell of a grid of
    side about rho^(s/n) on [0,1]^n.

    Copies are translated by multiples of delta, so each holds exactly
    E_delta(base) delta-cubes and copies never overlap.

    :base: ParamPointSet inside a single rho-cube
    :s: target exponent in (0, n]
    :rho: dyadic side of the base cube, delta <= rho <= 1
    :returns: ParamPointSet with E_delta >= delta^-s / 8
    :raises GeneratorException: when the base leaves its rho-cube or holds
        fewer than (rho/delta)^s / 8 delta-cubes

    """
    delta, n = base.scale, base.n
    if not 0 < s <= n:
        raise GeneratorException(f"exponent s={s} outside (0, {n}]")
    if not is_dyadic(rho) or rho < delta * (1 - 1e-12) or rho > 1:
        raise GeneratorException(f"base cube side {rho} is not a dyadic scale in [delta, 1]")
    if len(base) == 0:
        raise GeneratorException("empty base set")
    ratio = int(round(rho / delta))
    cubes = np.unique(base.cubes(), axis=0)
    corner = cubes.min(axis=0) // ratio * ratio
    local = cubes - corner
    if local.max() >= ratio:
        raise GeneratorException(f"base set does not fit in one cube of side {rho:g}")
    floor = (rho / delta) ** s / 8
    if len(local) < floor:
        raise GeneratorException(f"base set holds {len(local)} delta-cubes, fewer than "
                                 f"(rho/delta)^s / 8 = {floor:.4g}")
    m = tile_count(rho, s, n)
    side = int(round(1 / delta))
    shifts = np.floor(np.arange(m) * side / m).astype(np.int64)
    grid = np.stack(np.meshgrid(*([shifts] * n), indexing="ij"), axis=-1).reshape(-1, n)
    tiled = (grid[:, None, :] + local[None, :, :]).reshape(-1, n)
    logger.debug(f"tiled {len(local)} cubes into {m}^{n} cells of side ~{1 / m:g}")
    return ParamPointSet((tiled + 0.5) * delta, delta)
