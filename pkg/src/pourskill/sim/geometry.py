"""Volume a tilted cylinder can hold with its free surface at the lip."""
from __future__ import annotations

import math

import numpy as np

from ..core import ContainerSpec
from ..errors import ValidationError

MAX_TILT_DEG = 89.0


def _check_angle(theta_deg: float) -> None:
    if not 0.0 <= theta_deg < 90.0:
        raise ValidationError(f"tilt angle {theta_deg} outside [0, 90)")


def max_retained_volume(container: ContainerSpec, theta_deg: float) -> float:
    """Closed-form retained volume (mL) at tilt ``theta_deg``.

    The free surface is horizontal and passes through the lowest point of the
    rim. While the surface spans the whole cross-section the liquid is a
    truncated cylinder; past that it is a cylindrical wedge.
    """
    _check_angle(theta_deg)
    R = container.radius_mm
    H = container.height_mm
    k = math.tan(math.radians(theta_deg))
    if 2.0 * R * k <= H:
        return math.pi * R * R * (H - R * k) / 1000.0
    # surface meets the base at x0 (x measured along the tilt direction, lip at x = R)
    x0 = R - H / k
    s = math.sqrt(max(R * R - x0 * x0, 0.0))
    cube_term = s**3 / 3.0
    half_segment = 0.5 * (0.5 * math.pi * R * R - x0 * s - R * R * math.asin(x0 / R))
    return 2.0 * k * (cube_term - x0 * half_segment) / 1000.0


def oracle_max_retained_volume(container: ContainerSpec, theta_deg: float, resolution: int = 2000) -> float:
    """Brute-force retained volume by slicing along the container axis.

    Each slice at axial height z is the part of the disc lying under the free
    surface, a circular segment whose area is integrated with the midpoint rule.
    """
    _check_angle(theta_deg)
    if resolution < 100:
        raise ValidationError("oracle needs at least 100 slices")
    R = container.radius_mm
    H = container.height_mm
    k = math.tan(math.radians(theta_deg))
    dz = H / resolution
    z = (np.arange(resolution) + 0.5) * dz
    if k == 0.0:
        area = np.full(resolution, math.pi * R * R)
    else:
        # liquid occupies x >= a(z) where the plane z = H + (x - R) k sits above the slice
        a = np.clip(R - (H - z) / k, -R, R)
        area = R * R * np.arccos(a / R) - a * np.sqrt(R * R - a * a)
    return float(area.sum() * dz / 1000.0)


def critical_angle(container: ContainerSpec, volume_ml: float, tol: float = 1e-10) -> float:
    """Smallest tilt at which ``volume_ml`` starts to spill over the lip (degrees)."""
    if volume_ml >= container.capacity_ml:
        return 0.0
    lo, hi = 0.0, MAX_TILT_DEG
    if max_retained_volume(container, hi) >= volume_ml:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if max_retained_volume(container, mid) > volume_ml:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
