"""Tubes clustered in planted prisms.

Host prisms have half dimensions (s, t, 1/2 + delta), so a delta-tube of
length 1 parallel to the axis fits with s = delta. Host poses are drawn
until the host multiset meets the convex Wolff budget; every host is then
filled with tubes from a lattice of (offset, angle) pairs inside it, the
host's own axis tube first.
"""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from geometry.solids import Tube, Prism
from axioms.checks import convex_wolff_error
from generators.tubes import resolve_distinct, ANGLE_STEP, OFFSET_STEP
from util.rng import make_rng, random_rotation
from util.exceptions import GeneratorException

CWA_BUDGET = 4.0
# Largest tilt of a placed tube against the host axis, per host direction
MAX_TILT = 0.7
MAX_TRIES = 10000

@dataclass
class PrismCluster:
    tubes: list
    hosts: list
    host_of: np.ndarray         # host index of every tube
    cwa: float                  # convex Wolff error of the host multiset
    tries: int

def host_count(s, t):
    """Hosts needed for a unit own-prism value: about 1 / (4 s t)"""
    return max(1, math.ceil(1 / (4 * s * t)))

def _axis_grid(half_width, step):
    k = int(math.floor(half_width / step + 1e-9))
    return step * np.arange(-k, k + 1)

def host_lattice(delta, s, t):
    """(c_u, c_v, beta, alpha) placements of delta-tubes inside a host of
    half widths (s, t), in host coordinates. Offsets step OFFSET_STEP
    delta, angles ANGLE_STEP delta; the axis placement comes first."""
    rows = []
    for cu in _axis_grid(s - delta, OFFSET_STEP * delta):
        for beta in _axis_grid(min(2 * (s - delta - abs(cu)), MAX_TILT), ANGLE_STEP * delta):
            for cv in _axis_grid(t - delta, OFFSET_STEP * delta):
                room = 2 * (t - delta - abs(cv))
                for alpha in _axis_grid(min(room, MAX_TILT), ANGLE_STEP * delta):
                    rows.append((cu, cv, beta, alpha))
    rows.sort(key=lambda r: (any(r), r))
    return np.array(rows)

def _placed_tube(host: Prism, row, delta):
    cu, cv, beta, alpha = row
    u, v, w = host.frame
    sb, sa = math.sin(beta), math.sin(alpha)
    d = sb * u + sa * v + math.sqrt(1 - sb * sb - sa * sa) * w
    return Tube(host.center + cu * u + cv * v, d, delta)

def _draw_hosts(rng, n, s, t, delta):
    half = (s, t, 0.5 + delta)
    reach = math.sqrt(sum(h * h for h in half))
    radius = min(0.25, max(0.0, 1 - reach))
    hosts = []
    for _ in range(n):
        v = rng.normal(size=3)
        center = v / np.linalg.norm(v) * radius * rng.uniform() ** (1 / 3)
        hosts.append(Prism(center, random_rotation(rng), half))
    return hosts

def gen_prism_clustered(delta, s, t, count_per_prism, seed, hosts=None, budget=CWA_BUDGET,
                        max_tries=MAX_TRIES, config=None):
    """Plant a convex Wolff host multiset and fill every host with tubes.

    :delta: tube scale
    :s, t: host half widths, delta <= s <= t <= 1
    :count_per_prism: tubes per host
    :hosts: number of hosts, default host_count(s, t)
    :budget: largest accepted convex Wolff error of the hosts
    :config: CatalogConfig of the host check
    :returns: PrismCluster
    :raises GeneratorException: "could not meet CWA budget" after max_tries
        draws, or when a host holds fewer than count_per_prism placements

    """
    if not delta <= s <= t <= 1:
        raise GeneratorException(f"need delta <= s <= t <= 1, got {delta}, {s}, {t}")
    rng = make_rng(seed)
    n = hosts or host_count(s, t)
    for tries in range(1, max_tries + 1):
        planted = _draw_hosts(rng, n, s, t, delta)
        cwa = convex_wolff_error(planted, budget, config).error_constant
        if cwa <= budget:
            break
    else:
        raise GeneratorException(f"could not meet CWA budget {budget} in {max_tries} tries")
    lattice = host_lattice(delta, s, t)
    if len(lattice) < count_per_prism:
        raise GeneratorException(f"host {2 * s:g} x {2 * t:g} holds only {len(lattice)} tubes, "
                                 f"{count_per_prism} requested")
    order = []
    for _ in planted:
        rest = 1 + rng.permutation(len(lattice) - 1)
        order.append(list(np.concatenate([[0], rest])))
    tubes, host_of = [], []
    for k, host in enumerate(planted):
        for row in order[k][:count_per_prism]:
            tubes.append(_placed_tube(host, lattice[row], delta))
            host_of.append(k)
        del order[k][:count_per_prism]

    def resample(i):
        k = host_of[i]
        if not order[k]:
            raise GeneratorException(f"host {k} ran out of distinct placements")
        return _placed_tube(planted[k], lattice[order[k].pop(0)], delta)

    tubes = resolve_distinct(tubes, resample)
    logger.info(f"prism clustered family: {len(planted)} hosts, {len(tubes)} tubes, "
                f"host CWA {cwa:.3g} after {tries} draws")
    return PrismCluster(tubes, planted, np.array(host_of, dtype=int), cwa, tries)
