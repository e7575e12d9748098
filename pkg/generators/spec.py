"""Generator specifications and dispatch.

A GeneratorSpec names a generator, the scale, the seed and the
generator's own parameters. generate() is a pure function of the spec:
the same spec gives the same family, bit for bit.
"""
import math
from enum import Enum
from dataclasses import dataclass, field

from geometry.solids import solid_to_dict
from projection.points import ParamPointSet
from generators.tubes import gen_direction_separated, gen_sticky, gen_coplanar, gen_random_lines
from generators.prisms import gen_prism_clustered, CWA_BUDGET
from generators.points import gen_tiled_pointset
from util.exceptions import GeneratorException

class GeneratorKind(Enum):
    DIRECTION_SEPARATED = "direction-separated"
    STICKY = "sticky"
    COPLANAR = "coplanar"
    PRISM_CLUSTERED = "prism-clustered"
    RANDOM_LINES = "random-lines"
    TILED_POINTSET = "tiled-pointset"

@dataclass
class GeneratorSpec:
    """kind: GeneratorKind
    scale: delta
    seed: seed of the PCG64 generator
    params: kind specific parameters
        sticky: branching (2)
        prism-clustered: s (delta), t (sqrt delta), count_per_prism (8),
            hosts (1 / (4 s t)), budget (4)
        random-lines: count (delta^-2)
        tiled-pointset: base (points), s, rho
    """
    kind: GeneratorKind
    scale: float
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.kind, GeneratorKind):
            try:
                self.kind = GeneratorKind(self.kind)
            except ValueError:
                raise GeneratorException(f"unknown generator kind {self.kind!r}") from None
        if not self.scale > 0:
            raise GeneratorException(f"scale must be positive, got {self.scale}")

    def param(self, name, default=None):
        return self.params.get(name, default)

    def to_dict(self):
        return {"kind": self.kind.value, "scale": self.scale, "seed": self.seed, "params": dict(self.params)}

    @staticmethod
    def from_dict(data):
        try:
            return GeneratorSpec(data["kind"], float(data["scale"]), int(data.get("seed", 0)),
                                 dict(data.get("params", {})))
        except KeyError as e:
            raise GeneratorException(f"generator spec misses {e.args[0]!r}") from None

@dataclass
class Generated:
    """Output of a generator: a tube family and, depending on the kind,
    host prisms, a cover tree or a point set."""
    spec: GeneratorSpec
    tubes: list = None
    hosts: list = None
    tree: object = None
    points: ParamPointSet = None

    @property
    def scale(self):
        if self.tubes:
            return self.tubes[0].scale
        if self.points is not None:
            return self.points.scale
        return self.spec.scale

    def to_dict(self):
        data = {"spec": self.spec.to_dict(), "scale": self.scale}
        if self.tubes is not None:
            data["solids"] = [solid_to_dict(t) for t in self.tubes]
        if self.hosts is not None:
            data["hosts"] = [solid_to_dict(p) for p in self.hosts]
        if self.tree is not None:
            data["tree"] = [{"rho": level.rho, "buckets": [b.tolist() for b in level.buckets],
                             "parents": level.parents.tolist()} for level in self.tree.levels]
        if self.points is not None:
            data["points"] = self.points.to_dict()
        return data

def _direction_separated(spec):
    return Generated(spec, gen_direction_separated(spec.scale, spec.seed))

def _sticky(spec):
    family = gen_sticky(spec.scale, int(spec.param("branching", 2)), spec.seed)
    return Generated(spec, family.tubes, tree=family.tree)

def _coplanar(spec):
    return Generated(spec, gen_coplanar(spec.scale))

def _prism_clustered(spec):
    s = spec.param("s", spec.scale)
    t = spec.param("t", math.sqrt(spec.scale))
    cluster = gen_prism_clustered(spec.scale, s, t, int(spec.param("count_per_prism", 8)), spec.seed,
                                  hosts=spec.param("hosts"), budget=spec.param("budget", CWA_BUDGET))
    return Generated(spec, cluster.tubes, hosts=cluster.hosts)

def _random_lines(spec):
    count = int(spec.param("count", round(spec.scale ** -2)))
    return Generated(spec, gen_random_lines(spec.scale, count, spec.seed))

def _tiled_pointset(spec):
    for name in ("base", "s", "rho"):
        if spec.param(name) is None:
            raise GeneratorException(f"tiled-pointset needs parameter {name!r}")
    base = ParamPointSet(spec.param("base"), spec.scale)
    return Generated(spec, points=gen_tiled_pointset(base, spec.param("s"), spec.param("rho")))

GENERATORS = {
    GeneratorKind.DIRECTION_SEPARATED: _direction_separated,
    GeneratorKind.STICKY: _sticky,
    GeneratorKind.COPLANAR: _coplanar,
    GeneratorKind.PRISM_CLUSTERED: _prism_clustered,
    GeneratorKind.RANDOM_LINES: _random_lines,
    GeneratorKind.TILED_POINTSET: _tiled_pointset,
}

def generate(spec: GeneratorSpec) -> Generated:
    return GENERATORS[spec.kind](spec)
