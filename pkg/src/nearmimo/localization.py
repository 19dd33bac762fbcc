"""Closed-form least-squares intersection of LoS rays.

Each subarray contributes a ray from its center along its estimated
arrival direction.  The point minimizing the sum of squared distances
to all ray lines solves ``(sum_i B_i) p = sum_i B_i p_i`` with the
projector ``B_i = I - k_i k_i^T`` onto the plane orthogonal to ray i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

_RCOND_MIN = 1e-10


@dataclass(frozen=True)
class Ray:
    """A ray: origin point and unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        direction = np.asarray(self.direction, dtype=float).reshape(3)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ValueError("ray direction must be nonzero")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction / norm)


@dataclass(frozen=True)
class LocationEstimate:
    """LS intersection point with its residual and system conditioning."""

    point: np.ndarray
    residual: float
    condition: float


def ray_misfit(point, rays) -> float:
    """Sum of squared point-to-line distances, the LS objective."""
    point = np.asarray(point, dtype=float).reshape(3)
    total = 0.0
    for ray in rays:
        d = ray.origin - point
        b = d - ray.direction * (ray.direction @ d)
        total += float(b @ b)
    return total


def ls_intersect(rays) -> LocationEstimate:
    """Closed-form LS estimate of the common point of >= 2 rays.

    Raises
    ------
    DegenerateGeometryError
        If the 3x3 normal matrix is numerically singular (e.g. all rays
        parallel), detected via reciprocal condition number < 1e-10.
    """
    rays = list(rays)
    if len(rays) < 2:
        raise ValueError(f"need at least two rays, got {len(rays)}")
    s = np.zeros((3, 3))
    rhs = np.zeros(3)
    for ray in rays:
        b = np.eye(3) - np.outer(ray.direction, ray.direction)
        s += b
        rhs += b @ ray.origin
    svals = np.linalg.svd(s, compute_uv=False)
    if svals[0] == 0 or svals[-1] / svals[0] < _RCOND_MIN:
        raise DegenerateGeometryError(
            "ray directions span < 2 dimensions; intersection is unresolvable"
        )
    point = np.linalg.solve(s, rhs)
    return LocationEstimate(
        point=point,
        residual=ray_misfit(point, rays),
        condition=float(svals[0] / svals[-1]),
    )
