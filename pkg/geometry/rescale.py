import math
from dataclasses import dataclass

import numpy as np

from geometry.solids import Tube, Prism, Ball, ConvexWitness, frame_from_axis
from geometry.containment import contained_in_convex
from util.exceptions import GeometryException, ContainmentException

@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> linear @ x + offset"""
    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        linear = np.array(self.linear, dtype=float).reshape(3, 3)
        offset = np.array(self.offset, dtype=float).reshape(3)
        if abs(np.linalg.det(linear)) <= 1e-12:
            raise GeometryException("affine map is not invertible")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "offset", offset)

    @property
    def det(self):
        return float(np.linalg.det(self.linear))

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.linear.T + self.offset

    def inverse(self):
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.offset)

    def to_dict(self):
        return {"linear": self.linear.tolist(), "offset": self.offset.tolist()}

def circumscribed_ellipsoid(shape):
    """Closed form ellipsoid containing a tube, prism or ball.

    :returns: (center, frame rows, semi axes)

    For a tube the ellipsoid is the minimal one around its bounding cylinder
    (semi axes sqrt(3/2) r across and sqrt(3) h along); for a prism it is
    the ellipsoid through the corners, sqrt(3) times the half dimensions.
    """
    if isinstance(shape, Tube):
        frame = frame_from_axis(shape.direction)
        across = math.sqrt(1.5) * shape.radius
        along = math.sqrt(3.0) * (shape.length / 2 + shape.radius)
        return shape.anchor, frame, np.array([across, across, along])
    if isinstance(shape, Prism):
        return shape.center, shape.frame, math.sqrt(3.0) * np.asarray(shape.half_dims)
    if isinstance(shape, Ball):
        return shape.center, np.eye(3), np.full(3, shape.radius)
    raise GeometryException(f"no closed form ellipsoid for {type(shape).__name__}")

def unit_map(reference) -> AffineMap:
    """Affine map taking the circumscribed ellipsoid of reference onto the unit ball."""
    shape = reference.shape if isinstance(reference, ConvexWitness) else reference
    center, frame, axes = circumscribed_ellipsoid(shape)
    linear = np.diag(1.0 / axes) @ frame
    return AffineMap(linear, -linear @ center)

def map_solid(solid, phi: AffineMap):
    """Image of a solid under an affine map, approximated by a solid of the
    same kind. Tubes keep their axis exactly; the radius scales with the
    square root of the cross-section area factor |det| / |M d|. Prisms are
    exact when the map is diagonal in the prism frame."""
    if isinstance(solid, Tube):
        image = phi.linear @ solid.direction
        stretch = float(np.linalg.norm(image))
        cross = math.sqrt(abs(phi.det) / stretch)
        scale = None if solid.scale is None else solid.scale * cross
        return Tube(phi.apply(solid.anchor), image / stretch, solid.radius * cross,
                    solid.length * stretch, scale)
    if isinstance(solid, Prism):
        g = phi.linear @ (solid.frame.T * np.asarray(solid.half_dims))
        q, r = np.linalg.qr(g)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1
        q = q * signs
        half = np.abs(np.diag(r))
        frame = q.T
        if np.linalg.det(frame) < 0:
            frame[0] *= -1
        return Prism(phi.apply(solid.center), frame, tuple(half))
    if isinstance(solid, Ball):
        return Ball(phi.apply(solid.center), solid.radius * abs(phi.det) ** (1 / 3))
    if isinstance(solid, ConvexWitness):
        return ConvexWitness(map_solid(solid.shape, phi), solid.label)
    raise GeometryException(f"cannot map {type(solid).__name__}")

def unit_rescale(solids, reference):
    """Unit rescaling of solids relative to a reference convex set.

    :solids: list of Tube or Prism, each contained in reference
    :reference: ConvexWitness (or a bare shape)
    :returns: (rescaled solids, the AffineMap used)
    :raises ContainmentException: listing every solid outside reference

    """
    offenders = [(i, s) for i, s in enumerate(solids) if not contained_in_convex(s, reference)]
    if offenders:
        raise ContainmentException(offenders)
    phi = unit_map(reference)
    return [map_solid(s, phi) for s in solids], phi
