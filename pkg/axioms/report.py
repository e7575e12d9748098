import math
from enum import Enum
from dataclasses import dataclass, field

from geometry.solids import ConvexWitness

class Axiom(Enum):
    """Non-concentration conditions the lab can verify.

    WOLFF: rho-tubes hold <= C (rho/delta)^2 tubes, 2delta x rho x 2 prisms <= C rho/delta
    CONVEX_WOLFF: every convex W holds <= C |W| #f solids
    TUBE_WOLFF: convex Wolff restricted to tube witnesses
    FROSTMAN: rho-tubes hold <= C rho^sigma #f tubes
    EVERY_SCALE: convex Wolff at every scale through uniform partitioning covers
    SELF_SIMILAR: every scale plus bucket sizes comparable to (rho/delta)^sigma
    """
    WOLFF = "wolff"
    CONVEX_WOLFF = "convex-wolff"
    TUBE_WOLFF = "tube-wolff"
    FROSTMAN = "frostman"
    EVERY_SCALE = "every-scale"
    SELF_SIMILAR = "self-similar"

# Comparability loss of the finite witness catalog against all convex sets
CATALOG_CONSTANT = 8

@dataclass
class AxiomReport:
    """Outcome of an axiom check: the smallest error constant that makes the
    axiom hold on the input and the witness that forces it"""
    axiom: Axiom
    error_constant: float
    witness: object             # ConvexWitness, a scale, or None
    pass_threshold: float
    sigma: float = None         # Frostman / self-similar exponent
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.error_constant <= self.pass_threshold

    def to_dict(self):
        if isinstance(self.witness, ConvexWitness):
            witness = self.witness.to_dict()
        else:
            witness = self.witness
        value = self.error_constant
        return {
            "axiom": self.axiom.value,
            "error_constant": value if math.isfinite(value) else "inf",
            "witness": witness,
            "pass_threshold": self.pass_threshold,
            "passed": self.passed,
            "sigma": self.sigma,
            "catalog_constant": CATALOG_CONSTANT,
            "details": self.details,
        }
