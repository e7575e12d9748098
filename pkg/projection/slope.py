"""Slope functions f: [-1,1] -> R of twisted projections.

f is stored as its samples on the nodes -1, -1 + delta, ..., 1 and is
evaluated by linear interpolation. Derivative bounds are certified from
first and second finite differences of the samples; f is admissible when
1 <= |f'| <= 2 and |f''| <= 1/100.
"""
from dataclasses import dataclass

import numpy as np

from util.dyadic import scale_exponent
from util.exceptions import ProjectionException

MIN_SLOPE = 1.0
MAX_SLOPE = 2.0
MAX_CURVATURE = 0.01

_BOUND_TOL = 1e-9

def slope_nodes(scale):
    n = int(round(2 / scale))
    return -1.0 + np.arange(n + 1) * scale

@dataclass(frozen=True, eq=False)
class SlopeFunction:
    samples: np.ndarray
    scale: float
    test_mode: bool = False

    def __post_init__(self):
        scale_exponent(self.scale)
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != slope_nodes(self.scale).shape:
            raise ProjectionException(f"expected {len(slope_nodes(self.scale))} samples at scale "
                                      f"{self.scale}, got {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @staticmethod
    def from_callable(func, scale, test_mode=False):
        nodes = slope_nodes(scale)
        values = np.broadcast_to(np.asarray(func(nodes), dtype=float), nodes.shape)
        return SlopeFunction(values.copy(), scale, test_mode)

    @property
    def nodes(self):
        return slope_nodes(self.scale)

    @property
    def bounds(self):
        """(min |f'|, max |f'|, max |f''|) from finite differences"""
        first = np.abs(np.diff(self.samples)) / self.scale
        second = np.abs(np.diff(self.samples, 2)) / self.scale ** 2
        return float(first.min()), float(first.max()), float(second.max(initial=0.0))

    @property
    def admissible(self):
        lo, hi, curvature = self.bounds
        return (lo >= MIN_SLOPE - _BOUND_TOL and hi <= MAX_SLOPE + _BOUND_TOL
                and curvature <= MAX_CURVATURE + _BOUND_TOL)

    def check(self):
        """Raise unless admissible or flagged as a test-mode function"""
        if self.test_mode or self.admissible:
            return
        lo, hi, curvature = self.bounds
        raise ProjectionException(f"inadmissible slope function: |f'| in [{lo:.4g}, {hi:.4g}], "
                                  f"|f''| <= {curvature:.4g}")

    def __call__(self, z):
        return np.interp(z, self.nodes, self.samples)

    def to_dict(self):
        lo, hi, curvature = self.bounds
        return {"scale": self.scale, "samples": self.samples.tolist(), "test_mode": self.test_mode,
                "min_slope": lo, "max_slope": hi, "max_curvature": curvature}

    @staticmethod
    def from_dict(data):
        return SlopeFunction(data["samples"], data["scale"], data.get("test_mode", False))

def quadratic_slope(scale, linear=1.5, quadratic=1 / 300):
    """f(z) = linear z + quadratic z^2, admissible for the defaults"""
    return SlopeFunction.from_callable(lambda z: linear * z + quadratic * z ** 2, scale)
