import numpy as np

from geometry.solids import Tube, Prism, Ball, ConvexWitness, TOL
from geometry.family import SolidArrays
from util.exceptions import GeometryException, ScaleMismatchException

def point_segment_distance(points, p0, p1):
    """Euclidean distance from points (..., 3) to the closed segment [p0, p1]."""
    points = np.asarray(points, dtype=float)
    axis = np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float)
    length2 = float(np.dot(axis, axis))
    rel = points - p0
    if length2 == 0:
        return np.linalg.norm(rel, axis=-1)
    lam = np.clip(rel @ axis / length2, 0.0, 1.0)
    return np.linalg.norm(rel - lam[..., None] * axis, axis=-1)

def _points_inside(points, inflate, shape):
    """Whether every support point, inflated by its radius, lies in shape.

    :points: array (N, m, 3)
    :inflate: array (N,) or scalar
    :shape: Tube, Prism or Ball
    :returns: boolean array (N,)

    """
    inflate = np.broadcast_to(np.asarray(inflate, dtype=float), points.shape[:1])
    if isinstance(shape, Tube):
        p0, p1 = shape.endpoints
        dist = point_segment_distance(points, p0, p1) + inflate[:, None]
        return np.all(dist <= shape.radius * (1 + TOL) + TOL, axis=1)
    if isinstance(shape, Prism):
        local = np.abs((points - shape.center) @ shape.frame.T) + inflate[:, None, None]
        half = np.asarray(shape.half_dims)
        return np.all(local <= half * (1 + TOL) + TOL, axis=(1, 2))
    if isinstance(shape, Ball):
        dist = np.linalg.norm(points - shape.center, axis=-1) + inflate[:, None]
        return np.all(dist <= shape.radius * (1 + TOL) + TOL, axis=1)
    raise GeometryException(f"unsupported shape {type(shape).__name__}")

def contained_mask(family: SolidArrays, witness, indices=None) -> np.ndarray:
    """Containment of every solid of a family (or of the given indices) in a
    witness, vectorized."""
    shape = witness.shape if isinstance(witness, ConvexWitness) else witness
    if indices is None:
        return _points_inside(family.points, family.inflate, shape)
    return _points_inside(family.points[indices], family.inflate[indices], shape)

def contained_in_convex(solid, witness) -> bool:
    """Exact containment test of a tube, prism or ball in a convex witness.

    A capsule is inside a convex set iff both end balls are; a box iff its
    corners are. Both reduce to support point tests.
    """
    shape = witness.shape if isinstance(witness, ConvexWitness) else witness
    points, inflate = solid.support_points()
    return bool(_points_inside(points[None], np.array([inflate]), shape)[0])

def dilate_solid(solid, factor: float):
    """Central dilation by factor: half dimensions scale, center and frame stay.

    :solid: Tube, Prism or Ball
    :factor: positive dilation factor
    :returns: solid of the same kind
    :raises GeometryException: for factor <= 0

    """
    if not factor > 0:
        raise GeometryException(f"dilation factor must be positive, got {factor}")
    if isinstance(solid, Tube):
        return Tube(solid.anchor, solid.direction, solid.radius * factor,
                    solid.length * factor, solid.scale)
    if isinstance(solid, Prism):
        return Prism(solid.center, solid.frame, tuple(h * factor for h in solid.half_dims))
    if isinstance(solid, Ball):
        return Ball(solid.center, solid.radius * factor)
    if isinstance(solid, ConvexWitness):
        return ConvexWitness(dilate_solid(solid.shape, factor), solid.label)
    raise GeometryException(f"cannot dilate {type(solid).__name__}")

def _check_same_scale(a, b):
    if isinstance(a, Tube) and isinstance(b, Tube):
        if not np.isclose(a.scale, b.scale, rtol=1e-9, atol=0):
            raise ScaleMismatchException(a.scale, b.scale)

def essentially_distinct(a, b) -> bool:
    """True iff neither solid lies in the 2-fold dilate of the other."""
    _check_same_scale(a, b)
    return not (contained_in_convex(a, dilate_solid(b, 2)) or
                contained_in_convex(b, dilate_solid(a, 2)))
