"""Four-way classification of a shaded tube family.

A family of delta-tubes with shading Y falls, by measurement, into one or
more of

    A: the shaded union has Assouad dimension >= 3 - eps (directly, or
       through the prisms its heavy rectangles cluster into)
    B: the family satisfies the self-similar convex Wolff axioms
    C: some partitioning cover at a scale rho <= delta^eps is a richer,
       essentially distinct, convex Wolff family of rho-tubes
    D: some bucket of a rho-tube, rho >= delta^(1-eps), is richer than the
       family after unit rescaling and satisfies the convex Wolff axioms

Richer means at least rho^-(beta + tau) members, #f = delta^-beta.
"""
from enum import Enum
from dataclasses import dataclass, field

from loguru import logger

from geometry.family import family_scale
from geometry.rescale import unit_rescale
from shading.family import ShadedFamily
from voxel.grid import solid_cells
from assouad.scan import assouad_scan
from axioms.catalog import CatalogConfig
from axioms.checks import convex_wolff_error, essential_distinctness_violation
from axioms.covers import build_partitioning_cover, check_self_similar, family_sigma
from prisms.heavy import detect_heavy, heavy_by_level
from prisms.cluster import cluster_into_prisms
from prisms.coarsen import CoarsenConfig, run_dichotomy
from util.dyadic import dyadic_scales
from util.exceptions import PrismLabException, ContainmentException

class FourWayConclusion(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

@dataclass
class FourWayConfig:
    """separation: A of the Assouad scan
    tau: richness gain of conclusions C and D
    C: error budget of the axiom checks, default delta^-eps
    heavy_fraction: share of tubes in heavy rectangles that triggers the prism route
    """
    separation: float = 4.0
    tau: float = 0.1
    C: float = None
    heavy_fraction: float = 0.5
    catalog: CatalogConfig = None
    coarsen: CoarsenConfig = None

@dataclass
class FourWayResult:
    conclusions: list
    evidence: dict = field(default_factory=dict)

    @property
    def primary(self):
        return self.conclusions[0] if self.conclusions else None

    def to_dict(self):
        return {"conclusions": [c.value for c in self.conclusions],
                "primary": None if self.primary is None else self.primary.value,
                "evidence": self.evidence}

def _prism_route(f, heavy, eps, config, evidence):
    """Cluster the tubes of the heaviest rectangle and run the prism
    dichotomy on the resulting prisms; True when it certifies a ball"""
    delta = heavy.scale
    rect = max(heavy.rectangles, key=lambda h: h.count)
    sub = f.subfamily(rect.members)
    host = rect.prism
    K = min(delta ** -eps, rect.count * delta / host.t * (1 - 1e-9))
    try:
        clustering = cluster_into_prisms(sub, host, K)
    except (PrismLabException, ContainmentException) as exc:
        evidence["prism_route"] = {"clustering": str(exc)}
        return False
    union = f.union().occupancy.reshape(-1)
    cells = [solid_cells(p, f.scale) for p in clustering.prisms]
    prisms = ShadedFamily(clustering.prisms, [c[union[c]] for c in cells], f.scale, cells, check=False)
    route = {"omega": clustering.omega, "prisms": len(clustering.prisms),
             "coverage": clustering.coverage}
    evidence["prism_route"] = route
    if prisms.mass_cells == 0:
        return False
    try:
        run = run_dichotomy(prisms, eps, config.coarsen)
    except PrismLabException as exc:
        route["dichotomy"] = str(exc)
        return False
    route["dichotomy"] = run.rounds
    route["scan"] = None if run.scan is None else run.scan.to_dict()
    return run.certified

def _richer_cover(tubes, delta, beta, eps, config, budget):
    """First rho in [delta, delta^eps] whose cover tubes form a richer
    essentially distinct convex Wolff family"""
    for rho in dyadic_scales(delta, delta ** eps):
        cover = build_partitioning_cover(tubes, rho).cover
        if not cover or len(cover) < rho ** (-beta - config.tau):
            continue
        if essential_distinctness_violation(cover) is not None:
            continue
        report = convex_wolff_error(cover, budget, config.catalog)
        if report.passed:
            return {"rho": rho, "count": len(cover), "cwa": report.error_constant}
    return None

def _richer_bucket(tubes, delta, beta, eps, config, budget):
    """First rho-tube, rho in [delta^(1-eps), 1], whose rescaled bucket is
    richer and convex Wolff"""
    for rho in dyadic_scales(delta ** (1 - eps), 1.0):
        partition = build_partitioning_cover(tubes, rho)
        for k, (tube, bucket) in enumerate(zip(partition.cover, partition.buckets)):
            if len(bucket) < (delta / rho) ** (-beta - config.tau):
                continue
            rescaled, _ = unit_rescale([tubes[j] for j in bucket], tube)
            report = convex_wolff_error(rescaled, budget, config.catalog)
            if report.passed:
                return {"rho": rho, "tube": k, "count": int(len(bucket)),
                        "cwa": report.error_constant}
    return None

def classify_four_way(f: ShadedFamily, eps, config=None) -> FourWayResult:
    """Measure which of the conclusions A to D hold for a shaded tube family.

    :f: ShadedFamily of essentially distinct Tube
    :eps: exponent of the conclusions
    :config: FourWayConfig
    :returns: FourWayResult listing the conclusions in A..D order with the
        measurements behind each; an empty list when none could be shown

    """
    config = config or FourWayConfig()
    delta = family_scale(f.solids)
    tubes = list(f.solids)
    n = len(tubes)
    budget = config.C if config.C is not None else delta ** -eps
    conclusions = []
    evidence = {"family_size": n, "budget": budget}

    scan = assouad_scan(f.union(), config.separation)
    evidence["assouad"] = scan.to_dict()
    heavy = detect_heavy(tubes, eps, config.catalog)
    evidence["heavy"] = {"fraction": heavy.fraction, "rectangles": len(heavy.rectangles)}
    found_a = scan.zeta <= eps
    if not found_a and heavy.rectangles and heavy.fraction >= config.heavy_fraction:
        found_a = _prism_route(f, heavy, eps, config, evidence)
    if found_a:
        conclusions.append(FourWayConclusion.A)

    if n < 2:
        logger.info("four-way: a single tube only admits conclusion A")
        return FourWayResult(conclusions, evidence)
    beta = family_sigma(n, delta)
    evidence["beta"] = beta

    report, tree = check_self_similar(tubes, budget, config=config.catalog)
    evidence["self_similar"] = report.error_constant
    evidence["heavy_by_level"] = [{"rho": rho, "fraction": h.fraction, "rectangles": len(h.rectangles)}
                                  for rho, h in heavy_by_level(tree, eps, config.catalog)]
    if report.passed:
        conclusions.append(FourWayConclusion.B)

    richer = _richer_cover(tubes, delta, beta, eps, config, budget)
    evidence["richer_cover"] = richer
    if richer is not None:
        conclusions.append(FourWayConclusion.C)

    bucket = _richer_bucket(tubes, delta, beta, eps, config, budget)
    evidence["richer_bucket"] = bucket
    if bucket is not None:
        conclusions.append(FourWayConclusion.D)

    logger.info(f"four-way classification: {[c.value for c in conclusions] or 'none'}")
    return FourWayResult(conclusions, evidence)
