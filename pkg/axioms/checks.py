"""Wolff, Convex Wolff, Tube Wolff and Frostman checkers.

Each checker scans the finite witness catalog of `axioms.catalog` and returns
an `AxiomReport` with the smallest error constant that makes the axiom hold
on the input family and the witness forcing it.
"""
import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from geometry.solids import ConvexWitness, TOL
from geometry.family import SolidArrays, family_scale
from geometry.containment import contained_mask, contained_in_convex
from axioms.report import Axiom, AxiomReport
from axioms.catalog import WitnessScanner, anchor_indices
from util.exceptions import AxiomException, EssentialDistinctnessException, ContainmentException

DEFAULT_THRESHOLD = 100.0

def _arrays(solids):
    if isinstance(solids, SolidArrays):
        return solids
    solids = list(solids)
    if not solids:
        raise AxiomException("empty family")
    return SolidArrays(solids)

def tube_family(solids, what):
    arrays = _arrays(solids)
    if not arrays.is_tubes:
        raise AxiomException(f"{what} is defined for tube families only")
    return arrays

def witness_value(solids, witness: ConvexWitness):
    """#{S in f: S inside W} / (|W| #f) for one witness"""
    arrays = _arrays(solids)
    count = int(contained_mask(arrays, witness).sum())
    return count / (witness.volume * len(arrays))

def convex_wolff_error(solids, threshold=DEFAULT_THRESHOLD, config=None, scanner=None):
    """Convex Wolff error of a family of tubes or prisms.

    :solids: list of Tube or Prism (or a SolidArrays view)
    :threshold: pass threshold of the report
    :config: CatalogConfig of the witness catalog
    :scanner: an existing WitnessScanner over the same family
    :returns: AxiomReport
    :raises AxiomException: on an empty family

    """
    scanner = scanner or WitnessScanner(_arrays(solids), config)
    n = scanner.n
    value, best, members = scanner.scan(lambda cand: cand.witness.volume * n)
    return AxiomReport(Axiom.CONVEX_WOLFF, value, best.witness, threshold,
                       details={"count": int(len(members)), "family_size": n,
                                "witness_volume": best.witness.volume})

def _tube_candidates(scanner):
    for i in anchor_indices(scanner.n, scanner.config.max_anchors):
        yield scanner.own_witness(i)
        yield from scanner.tube_ladder(i)

def tube_wolff_error(solids, threshold=DEFAULT_THRESHOLD, config=None, scanner=None):
    """Convex Wolff error restricted to tube witnesses. Never exceeds the
    convex Wolff error computed with the same catalog configuration."""
    scanner = scanner or WitnessScanner(tube_family(solids, "tube Wolff"), config)
    n = scanner.n
    value, best, members = scanner.scan(lambda cand: cand.witness.volume * n,
                                        _tube_candidates(scanner))
    return AxiomReport(Axiom.TUBE_WOLFF, value, best.witness, threshold,
                       details={"count": int(len(members)), "family_size": n, "rho": best.rho})

def wolff_error(solids, threshold=DEFAULT_THRESHOLD, config=None):
    """Classical Wolff axiom at scale delta: a rho-tube holds at most
    C (rho/delta)^2 tubes and a 2delta x rho x 2 box at most C rho/delta."""
    arrays = tube_family(solids, "Wolff")
    delta = family_scale(arrays.solids)
    scanner = WitnessScanner(arrays, config)

    def candidates():
        for i in anchor_indices(scanner.n, scanner.config.max_anchors):
            yield scanner.own_witness(i)
            yield from scanner.tube_ladder(i)
            yield from scanner.box_ladder(i, s_min=2 * delta, s_max=2 * delta, fixed_length=2.0)

    def normalizer(cand):
        if cand.rho is not None:
            return (cand.rho / delta) ** 2
        return cand.t / delta

    value, best, members = scanner.scan(normalizer, candidates())
    return AxiomReport(Axiom.WOLFF, value, best.witness, threshold,
                       details={"count": int(len(members)), "family_size": scanner.n})

def essential_distinctness_violation(solids):
    """First pair (i, j), i < j, of tubes that are not essentially distinct,
    or None.

    Candidate pairs come from a KD-tree on the axis directions (and their
    antipodes); every candidate pair is then tested exactly.
    """
    arrays = tube_family(solids, "essential distinctness")
    family_scale(arrays.solids)
    n = len(arrays)
    if n < 2:
        return None
    dirs = arrays.directions
    radii = arrays.inflate
    lengths = np.linalg.norm(arrays.p1 - arrays.p0, axis=1)
    # a inside the 2-dilate of b puts both endpoints of a within 2 r_b of b's line
    reach = 4.1 * radii.max() / max(lengths.min(), radii.max())
    tree = cKDTree(np.concatenate([dirs, -dirs]))
    pairs = tree.query_pairs(min(reach, 2.0) + 1e-12, output_type="ndarray")
    if len(pairs) == 0:
        return None
    i, j = pairs[:, 0] % n, pairs[:, 1] % n
    keep = i != j
    i, j = np.minimum(i[keep], j[keep]), np.maximum(i[keep], j[keep])
    pairs = np.unique(np.stack([i, j], axis=1), axis=0)
    if len(pairs) == 0:
        return None
    bad = _inside_double(arrays, pairs[:, 0], pairs[:, 1]) | _inside_double(arrays, pairs[:, 1], pairs[:, 0])
    if not bad.any():
        return None
    a, b = pairs[np.argmax(bad)]
    return int(a), int(b)

def _inside_double(arrays, a, b):
    """Whether tube a[k] lies in the 2-dilate of tube b[k], per k"""
    mid = (arrays.p0[b] + arrays.p1[b]) / 2
    half = arrays.p1[b] - mid
    q0, q1 = mid - 2 * half, mid + 2 * half
    out = np.ones(len(a), dtype=bool)
    for end in (arrays.p0[a], arrays.p1[a]):
        axis = q1 - q0
        rel = end - q0
        lam = np.clip(np.einsum("ij,ij->i", rel, axis) / np.einsum("ij,ij->i", axis, axis), 0, 1)
        dist = np.linalg.norm(rel - lam[:, None] * axis, axis=1) + arrays.inflate[a]
        out &= dist <= 2 * arrays.inflate[b] * (1 + TOL) + TOL
    return out

def check_essentially_distinct(solids):
    pair = essential_distinctness_violation(solids)
    if pair is not None:
        raise EssentialDistinctnessException(pair)

def frostman_error(solids, sigma, threshold=DEFAULT_THRESHOLD, config=None, check_distinct=True):
    """Frostman constant of dimension sigma: the maximum over catalog
    rho-tubes of #f[T_rho] / (rho^sigma #f).

    :returns: AxiomReport whose details carry the per scale maxima in `by_scale`
    :raises EssentialDistinctnessException: naming the first offending pair

    """
    if not 0 < sigma <= 4:
        raise AxiomException(f"sigma must lie in (0, 4], got {sigma}")
    arrays = tube_family(solids, "Frostman")
    if check_distinct:
        check_essentially_distinct(arrays)
    scanner = WitnessScanner(arrays, config)
    n = scanner.n
    by_rho = {}
    for cand in _tube_candidates(scanner):
        by_rho.setdefault(round(cand.rho, 12), []).append(cand)
    by_scale = {}
    best = (-1.0, None)
    for rho in sorted(by_rho):
        value, cand, _ = scanner.scan(lambda c: c.rho ** sigma * n, by_rho[rho])
        by_scale[rho] = value
        if value > best[0]:
            best = (value, cand)
    value, cand = best
    logger.debug(f"frostman sigma={sigma}: {len(by_scale)} scales, worst rho={cand.rho}")
    return AxiomReport(Axiom.FROSTMAN, value, cand.witness, threshold, sigma=sigma,
                       details={"by_scale": by_scale, "rho": cand.rho, "family_size": n})

def cardinality_lower_bound(solids, error_constant):
    """Every family with convex Wolff error C has at least 1 / (C max|S|)
    members: take W = S itself."""
    arrays = _arrays(solids)
    return 1.0 / (error_constant * arrays.volumes.max())

def coarsened_cwa(fine, coarse, threshold=DEFAULT_THRESHOLD, config=None):
    """Convex Wolff report of a coarsening S -> T(S), together with the
    fine family's value at the coarse worst witness, which bounds it.

    :fine: list of solids
    :coarse: list of solids, coarse[i] containing fine[i]
    :returns: (AxiomReport of coarse, fine witness value)
    :raises ContainmentException: when some coarse[i] misses fine[i]

    """
    if len(fine) != len(coarse):
        raise AxiomException("coarsening must map every solid")
    offenders = [(i, s) for i, (s, big) in enumerate(zip(fine, coarse))
                 if not contained_in_convex(s, big)]
    if offenders:
        raise ContainmentException(offenders)
    report = convex_wolff_error(coarse, threshold, config)
    return report, witness_value(fine, report.witness)

def uniform_cover_cwa(covered, cover, uniformity, threshold=DEFAULT_THRESHOLD, config=None):
    """Convex Wolff report of a K-uniform cover and the bound K times the
    covered family's value at the cover's worst witness."""
    report = convex_wolff_error(cover, threshold, config)
    return report, uniformity * witness_value(covered, report.witness)
