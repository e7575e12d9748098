import math
from enum import Enum
from dataclasses import dataclass, field

import numpy as np

from util.exceptions import GeometryException

# Slack used for unit norms, orthonormality and containment comparisons
TOL = 1e-12

class WitnessKind(Enum):
    """Shapes a convex witness can take.

    TUBE: closed rho-neighbourhood of a segment (a capsule)
    PRISM: oriented rectangular box
    BALL: euclidean ball
    """
    TUBE = "tube"
    PRISM = "prism"
    BALL = "ball"

def _as_point(value, name):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise GeometryException(f"{name} must be a finite point of R^3, got {value}")
    return arr

@dataclass(frozen=True, eq=False)
class Tube:
    """Closed radius-neighbourhood of a segment of the given length centered
    at anchor. `scale` is the delta of the family the tube belongs to; it
    defaults to the radius."""
    anchor: np.ndarray
    direction: np.ndarray
    radius: float
    length: float = 1.0
    scale: float = None

    def __post_init__(self):
        anchor = _as_point(self.anchor, "anchor")
        direction = _as_point(self.direction, "direction")
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise GeometryException("tube direction must be non-zero")
        if abs(norm - 1) > 1e-6:
            raise GeometryException(f"tube direction is not a unit vector (|d| = {norm})")
        if not self.radius > 0:
            raise GeometryException(f"tube radius must be positive, got {self.radius}")
        if not self.length > 0:
            raise GeometryException(f"tube length must be positive, got {self.length}")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "direction", direction / norm)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "length", float(self.length))
        scale = self.radius if self.scale is None else float(self.scale)
        object.__setattr__(self, "scale", scale)
        anchor.setflags(write=False)
        self.direction.setflags(write=False)

    @staticmethod
    def from_endpoints(p0, p1, radius, scale=None):
        p0 = _as_point(p0, "p0")
        p1 = _as_point(p1, "p1")
        axis = p1 - p0
        length = np.linalg.norm(axis)
        if length == 0:
            raise GeometryException("tube endpoints coincide")
        return Tube((p0 + p1) / 2, axis / length, radius, length, scale)

    @property
    def endpoints(self):
        half = self.direction * (self.length / 2)
        return self.anchor - half, self.anchor + half

    @property
    def center(self):
        return self.anchor

    @property
    def volume(self):
        return math.pi * self.radius ** 2 * self.length + 4.0 / 3.0 * math.pi * self.radius ** 3

    @property
    def thinnest(self):
        return self.radius

    def bounding_prism(self):
        """Smallest box in the tube's own frame containing the tube."""
        frame = frame_from_axis(self.direction)
        r = self.radius
        return Prism(self.anchor, frame, (r, r, self.length / 2 + r))

    def support_points(self):
        return np.stack(self.endpoints), self.radius

    def with_scale(self, scale):
        return Tube(self.anchor, self.direction, self.radius, self.length, scale)

    def to_dict(self):
        return {"anchor": self.anchor.tolist(), "dir": self.direction.tolist(),
                "radius": self.radius, "length": self.length, "scale": self.scale}

    @staticmethod
    def from_dict(data):
        return Tube(data["anchor"], data["dir"], data["radius"],
                    data.get("length", 1.0), data.get("scale"))

    def __repr__(self):
        return (f"Tube(anchor={self.anchor.round(6).tolist()}, "
                f"dir={self.direction.round(6).tolist()}, r={self.radius:g})")

@dataclass(frozen=True, eq=False)
class Prism:
    """Oriented box. `frame` rows are the unit vectors u, v, w and
    `half_dims` the half extents along them: (s/2, t/2, length/2). The axis
    line is the w line through the center and the plane is spanned by v, w."""
    center: np.ndarray
    frame: np.ndarray
    half_dims: tuple

    def __post_init__(self):
        center = _as_point(self.center, "center")
        frame = np.asarray(self.frame, dtype=float).reshape(3, 3)
        if np.max(np.abs(frame @ frame.T - np.eye(3))) > 1e-9:
            raise GeometryException("prism frame is not orthonormal")
        if np.linalg.det(frame) < 0:
            raise GeometryException("prism frame is not right-handed")
        half = tuple(float(h) for h in self.half_dims)
        if len(half) != 3 or min(half) <= 0:
            raise GeometryException(f"prism half dimensions must be positive, got {self.half_dims}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "half_dims", half)
        center.setflags(write=False)
        frame.setflags(write=False)

    @property
    def dims(self):
        return tuple(2 * h for h in self.half_dims)

    @property
    def s(self):
        return 2 * self.half_dims[0]

    @property
    def t(self):
        return 2 * self.half_dims[1]

    @property
    def normal(self):
        return self.frame[0]

    @property
    def axis(self):
        return self.frame[2]

    @property
    def volume(self):
        hx, hy, hz = self.half_dims
        return 8.0 * hx * hy * hz

    @property
    def thinnest(self):
        return min(self.half_dims)

    def corners(self):
        signs = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], dtype=float)
        return self.center + (signs * np.asarray(self.half_dims)) @ self.frame

    def support_points(self):
        return self.corners(), 0.0

    def to_dict(self):
        return {"center": self.center.tolist(), "frame": self.frame.tolist(),
                "dims": list(self.dims)}

    @staticmethod
    def from_dict(data):
        return Prism(data["center"], data["frame"], tuple(d / 2 for d in data["dims"]))

    def __repr__(self):
        return f"Prism(center={self.center.round(6).tolist()}, dims={[round(d, 6) for d in self.dims]})"

@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = _as_point(self.center, "center")
        if not self.radius > 0:
            raise GeometryException(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        center.setflags(write=False)

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius ** 3

    @property
    def thinnest(self):
        return self.radius

    def support_points(self):
        return self.center[None, :], self.radius

    def to_dict(self):
        return {"center": self.center.tolist(), "radius": self.radius}

    @staticmethod
    def from_dict(data):
        return Ball(data["center"], data["radius"])

_KIND_OF = {Tube: WitnessKind.TUBE, Prism: WitnessKind.PRISM, Ball: WitnessKind.BALL}
_CLASS_OF = {kind: cls for cls, kind in _KIND_OF.items()}

@dataclass(frozen=True, eq=False)
class ConvexWitness:
    """A convex set W used as a non-concentration witness"""
    shape: object
    label: str = field(default="")

    def __post_init__(self):
        if type(self.shape) not in _KIND_OF:
            raise GeometryException(f"unsupported witness shape {type(self.shape).__name__}")

    @property
    def kind(self):
        return _KIND_OF[type(self.shape)]

    @property
    def volume(self):
        return self.shape.volume

    def to_dict(self):
        return {"kind": self.kind.value, "shape": self.shape.to_dict(),
                "volume": self.volume, "label": self.label}

    @staticmethod
    def from_dict(data):
        kind = WitnessKind(data["kind"])
        return ConvexWitness(_CLASS_OF[kind].from_dict(data["shape"]), data.get("label", ""))

def solid_to_dict(solid):
    data = solid.to_dict()
    data["kind"] = _KIND_OF[type(solid)].value
    return data

def solid_from_dict(data):
    kind = WitnessKind(data.get("kind", "tube"))
    return _CLASS_OF[kind].from_dict(data)

def check_member(solid):
    """Bounds on solids that make up a family, beyond what witnesses obey:
    tubes have radius <= 1 and anchor in B(0, 1), prisms have s <= t <= 1.

    :raises GeometryException: on the first bound broken
    :returns: solid

    """
    if isinstance(solid, Tube):
        if solid.radius > 1 + TOL:
            raise GeometryException(f"family tube radius must be at most 1, got {solid.radius}")
        if np.linalg.norm(solid.anchor) > 1 + TOL:
            raise GeometryException(f"family tube anchor {solid.anchor.tolist()} lies outside B(0, 1)")
    elif isinstance(solid, Prism):
        s, t = solid.s, solid.t
        if s > t * (1 + TOL) or t > 1 + TOL:
            raise GeometryException(f"family prism needs s <= t <= 1, got s={s:g}, t={t:g}")
    return solid

def frame_from_axis(axis, hint=None):
    """Right-handed orthonormal frame (u, v, w) with w along axis. When hint
    is given, u is the component of hint orthogonal to w."""
    w = np.asarray(axis, dtype=float)
    w = w / np.linalg.norm(w)
    if hint is not None:
        u = np.asarray(hint, dtype=float) - np.dot(hint, w) * w
        if np.linalg.norm(u) < 1e-9:
            hint = None
    if hint is None:
        # Pick the coordinate axis least aligned with w
        e = np.zeros(3)
        e[np.argmin(np.abs(w))] = 1.0
        u = e - np.dot(e, w) * w
    u = u / np.linalg.norm(u)
    v = np.cross(w, u)
    return np.stack([u, v, w])

def angle_between_lines(d1, d2):
    """Unsigned angle in [0, pi/2] between two lines with directions d1, d2."""
    c = abs(float(np.dot(d1, d2)) / (np.linalg.norm(d1) * np.linalg.norm(d2)))
    return math.acos(min(1.0, c))

def line_metric(a: Tube, b: Tube) -> float:
    """Orientation free distance between tube axes: the max distance between
    matched endpoints, minimized over the two matchings."""
    a0, a1 = a.endpoints
    b0, b1 = b.endpoints
    straight = max(np.linalg.norm(a0 - b0), np.linalg.norm(a1 - b1))
    crossed = max(np.linalg.norm(a0 - b1), np.linalg.norm(a1 - b0))
    return float(min(straight, crossed))

def domain_box(half_extent=1.0):
    return Prism(np.zeros(3), np.eye(3), (half_extent,) * 3)
