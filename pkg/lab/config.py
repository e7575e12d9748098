"""Experiment configuration."""
import json
from enum import Enum
from dataclasses import dataclass, asdict

from axioms.report import Axiom
from axioms.checks import DEFAULT_THRESHOLD
from util.exceptions import LabException

class Command(Enum):
    GENERATE = "generate"
    CHECK = "check"
    ASSOUAD = "assouad"
    TWO_SCALE = "two-scale"
    PRISM_DICHOTOMY = "prism-dichotomy"
    PROJECT = "project"

# Conventions every number in a report is measured under
CONVENTIONS = {
    "domain": "[-1,1]^3",
    "dilation": "chebyshev",
    "covering": "dyadic boxes",
    "membership": "cell center",
    "delta": "2^-k",
}

@dataclass
class ExperimentConfig:
    """command: Command
    input: source string (see datasource.sources.Source), unused by generate
        when `generator` is given
    output: report path; for generate the family document itself
    trace: JSON lines trace path
    generator: GeneratorSpec document for generate
    axiom: Axiom of the check command
    threshold: C, the pass threshold of checks
    sigma: Frostman exponent, or s of point set scans
    eps: target exponent of amplification, dichotomy and projection
    min_separation: A, least r / rho of Assouad scans
    seed: generator seed, overrides the seed of `generator`
    max_anchors: witness catalog anchors, None for every solid
    four_way: run the four-way classification after the dichotomy
    """
    command: Command
    input: str = None
    output: str = None
    trace: str = None
    generator: dict = None
    axiom: Axiom = Axiom.CONVEX_WOLFF
    threshold: float = DEFAULT_THRESHOLD
    sigma: float = None
    eps: float = 0.5
    min_separation: float = 4.0
    seed: int = None
    max_anchors: int = None
    four_way: bool = False

    def __post_init__(self):
        try:
            self.command = Command(self.command)
            self.axiom = Axiom(self.axiom)
        except ValueError as e:
            raise LabException(str(e)) from None
        for name in ("threshold", "eps", "min_separation"):
            if not getattr(self, name) > 0:
                raise LabException(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("sigma", "max_anchors"):
            if getattr(self, name) is not None and not getattr(self, name) > 0:
                raise LabException(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("input", "output", "trace"):
            if getattr(self, name) == "":
                raise LabException(f"empty {name} path")
        if self.command is Command.GENERATE:
            if self.generator is None and not self.input:
                raise LabException("generate needs a generator spec")
        elif not self.input:
            raise LabException(f"{self.command.value} needs an input")

    def to_dict(self):
        data = asdict(self)
        data["command"] = self.command.value
        data["axiom"] = self.axiom.value
        return data

    @staticmethod
    def from_dict(data):
        try:
            return ExperimentConfig(**data)
        except TypeError as e:
            raise LabException(f"malformed experiment config: {e}") from None

    @staticmethod
    def load(path):
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise LabException(f"cannot read experiment config {path}: {e}") from None
        if isinstance(data, list):
            return [ExperimentConfig.from_dict(d) for d in data]
        return ExperimentConfig.from_dict(data)
