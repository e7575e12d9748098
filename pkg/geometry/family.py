import numpy as np

from geometry.solids import Tube, Prism
from util.exceptions import GeometryException, ScaleMismatchException

class SolidArrays:
    """Vectorized view of a homogeneous family of solids.

    Every solid is stored as its support points plus an inflation radius: the
    two segment endpoints and the radius for tubes, the eight corners and 0
    for prisms, the center and the radius for balls. A convex set contains
    the solid iff it contains every support point inflated by the radius.
    """

    def __init__(self, solids):
        solids = list(solids)
        if not solids:
            raise GeometryException("empty family")
        kinds = {type(s) for s in solids}
        if len(kinds) != 1:
            raise GeometryException("family mixes solid kinds")
        self.kind = kinds.pop()
        self.solids = solids
        points, inflate = zip(*(s.support_points() for s in solids))
        self.points = np.stack(points)
        self.inflate = np.asarray(inflate, dtype=float)
        self.volumes = np.array([s.volume for s in solids])

    def __len__(self):
        return len(self.solids)

    @property
    def centers(self):
        return self.points.mean(axis=1)

    @property
    def is_tubes(self):
        return self.kind is Tube

    @property
    def p0(self):
        return self.points[:, 0, :]

    @property
    def p1(self):
        return self.points[:, -1, :]

    @property
    def directions(self):
        """Unit axis direction per solid (tube axes, prism w axes)."""
        if self.kind is Tube:
            return np.stack([t.direction for t in self.solids])
        if self.kind is Prism:
            return np.stack([p.frame[2] for p in self.solids])
        raise GeometryException("balls have no direction")

    @property
    def normals(self):
        if self.kind is not Prism:
            raise GeometryException("only prisms have plane normals")
        return np.stack([p.frame[0] for p in self.solids])

    def subset(self, indices):
        return SolidArrays([self.solids[i] for i in indices])

def family_scale(solids):
    """Common delta of a tube family.

    :solids: iterable of Tube
    :returns: the shared scale
    :raises ScaleMismatchException: when two tubes disagree

    """
    scale = None
    for s in solids:
        if not isinstance(s, Tube):
            continue
        value = s.scale
        if scale is None:
            scale = value
        elif not np.isclose(scale, value, rtol=1e-9, atol=0):
            raise ScaleMismatchException(scale, value)
    return scale

def line_metric_matrix(p0a, p1a, p0b, p1b):
    """Pairwise orientation free endpoint distance between two tube sets."""
    d00 = np.linalg.norm(p0a[:, None] - p0b[None], axis=-1)
    d11 = np.linalg.norm(p1a[:, None] - p1b[None], axis=-1)
    d01 = np.linalg.norm(p0a[:, None] - p1b[None], axis=-1)
    d10 = np.linalg.norm(p1a[:, None] - p0b[None], axis=-1)
    return np.minimum(np.maximum(d00, d11), np.maximum(d01, d10))

def canonical_directions(directions):
    """Flip directions into the upper half space (ties broken on y then x)."""
    d = np.array(directions, dtype=float)
    key = np.where(np.abs(d[:, 2]) > 1e-12, d[:, 2],
                   np.where(np.abs(d[:, 1]) > 1e-12, d[:, 1], d[:, 0]))
    d[key < 0] *= -1
    return d

def mean_axis(tubes):
    """Average axis of a set of roughly parallel tubes, as (midpoint, unit
    direction, length). Directions are aligned to the first tube first."""
    ref = tubes[0].direction
    p0s, p1s = [], []
    for t in tubes:
        a, b = t.endpoints
        if np.dot(t.direction, ref) < 0:
            a, b = b, a
        p0s.append(a)
        p1s.append(b)
    p0 = np.mean(p0s, axis=0)
    p1 = np.mean(p1s, axis=0)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length < 1e-12:
        return p0, ref, tubes[0].length
    return (p0 + p1) / 2, axis / length, length
