import math

from util.exceptions import VoxelException

# Relative slack when deciding whether a float is an exact power of two
_DYADIC_TOL = 1e-12

def scale_exponent(value: float) -> int:
    """Exponent j with value = 2^-j.

    :value: positive number that should be a power of two
    :returns: the integer j
    :raises VoxelException: when value is not a power of two

    """
    if value <= 0:
        raise VoxelException(f"scale {value} is not a power of 2")
    j = -math.log2(value)
    jr = round(j)
    if abs(j - jr) > _DYADIC_TOL * max(1.0, abs(j)):
        raise VoxelException(f"scale {value} is not a power of 2")
    return int(jr)

def is_dyadic(value: float) -> bool:
    try:
        scale_exponent(value)
    except VoxelException:
        return False
    return True

def dyadic_floor(value: float) -> float:
    """Largest power of two that is <= value."""
    if value <= 0:
        raise VoxelException(f"cannot take the dyadic floor of {value}")
    return 2.0 ** math.floor(math.log2(value) + _DYADIC_TOL)

def dyadic_ceil(value: float) -> float:
    if value <= 0:
        raise VoxelException(f"cannot take the dyadic ceiling of {value}")
    return 2.0 ** math.ceil(math.log2(value) - _DYADIC_TOL)

def dyadic_scales(low: float, high: float = 1.0):
    """Powers of two in [low, high], ascending."""
    scales = []
    rho = dyadic_ceil(low)
    while rho <= high * (1 + _DYADIC_TOL):
        scales.append(rho)
        rho *= 2
    return scales

def dyadic_band(value: float) -> int:
    """Index i of the band [2^i, 2^(i+1)) holding value (value > 0)."""
    return int(math.floor(math.log2(value) + _DYADIC_TOL))

def pigeonhole_loss(n: int) -> float:
    """Retention guaranteed by pigeonholing n objects into dyadic bands."""
    return 1.0 / (2.0 * math.log2(max(n, 1)) + 2.0)

def log2_inverse(delta: float) -> float:
    return math.log2(1.0 / delta)
