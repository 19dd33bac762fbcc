"""Dictionary construction for the sparse channel-recovery problems.

Three families:

* angular: plane-wave Kronecker atoms of one subarray over uniform
  direction-cosine grids ``(2z - Z - 1)/Z`` per axis,
* location-aided: vectorized LoS MIMO channels over a small 3D grid of
  candidate user-center positions,
* spherical (baseline): full-array spherical steering vectors over a
  joint angle/distance grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import far_field_steering, los_channel, near_field_steering
from .errors import DegenerateGridError
from .geometry import ArrayGeometry, build_ula

# grid x-coordinates are kept in the physical half-space in front of the array
MIN_GRID_X = 0.1


@dataclass(frozen=True)
class AngularDictionary:
    """Plane-wave atoms ``a_h(g1) ⊗ a_v(g2)`` over a Z x Z cosine grid.

    Columns are ordered g1-major: column ``(z1, z2)`` sits at index
    ``z1 * Z + z2``.
    """

    matrix: np.ndarray
    cosines: np.ndarray
    z: int
    m_ih: int
    m_iv: int
    d_h: float
    d_v: float
    wavelength: float

    @property
    def num_atoms(self) -> int:
        return self.matrix.shape[1]

    def column_index(self, z1: int, z2: int) -> int:
        return z1 * self.z + z2


@dataclass(frozen=True)
class LocationDictionary:
    """Vectorized LoS channels over the 3D location grid around a center."""

    matrix: np.ndarray
    points: np.ndarray  # (S, 3), x-major / z-fastest ordering
    center: np.ndarray
    half_widths: tuple[float, float, float]
    counts: tuple[int, int, int]

    @property
    def num_atoms(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SphericalDictionary:
    """Near-field steering atoms over joint (cosine, cosine, distance) grid."""

    matrix: np.ndarray
    cosines: np.ndarray
    distances: np.ndarray
    entries: np.ndarray  # (num_atoms, 3) rows of (ky, kz, r)


def cosine_grid(z: int) -> np.ndarray:
    """The uniform direction-cosine grid ``(2z - Z - 1)/Z``, z = 1..Z."""
    return (2.0 * np.arange(1, z + 1) - z - 1) / z


def build_angular(
    m_ih: int, m_iv: int, d_h: float, d_v: float, wavelength: float, z: int
) -> AngularDictionary:
    """Build the subarray angular dictionary with Z^2 Kronecker atoms."""
    if z < 2:
        raise ValueError(f"need at least 2 grid points per axis, got {z}")
    g = cosine_grid(z)
    a_h = np.column_stack([far_field_steering(m_ih, d_h, c, wavelength) for c in g])
    a_v = np.column_stack([far_field_steering(m_iv, d_v, c, wavelength) for c in g])
    return AngularDictionary(
        matrix=np.kron(a_h, a_v), cosines=g, z=z,
        m_ih=m_ih, m_iv=m_iv, d_h=d_h, d_v=d_v, wavelength=wavelength,
    )


def _axis_grid(center: float, half_width: float, count: int, label: str) -> np.ndarray:
    if count < 1:
        raise ValueError(f"{label}: need at least one sample, got {count}")
    if half_width < 0:
        raise ValueError(f"{label}: negative half-width {half_width}")
    if count == 1:
        return np.array([center])
    if half_width == 0:
        raise DegenerateGridError(f"{label}: {count} samples but zero extent")
    return np.linspace(center - half_width, center + half_width, count)


def build_location(
    center,
    dx: float, dy: float, dz: float,
    s_x: int, s_y: int, s_z: int,
    bs: ArrayGeometry, ue_template: ArrayGeometry, wavelength: float,
) -> LocationDictionary:
    """Build the location-aided dictionary around an estimated center.

    Each axis is sampled uniformly over ``center ± half_width`` with the
    stated count (a count of 1 collapses the axis).  Column ``s`` is the
    column-major vectorization of the LoS channel with the user array
    moved to grid point ``s``; grid x values are clamped to stay in
    front of the array.
    """
    center = np.asarray(center, dtype=float).reshape(3)
    gx = np.maximum(_axis_grid(center[0], dx, s_x, "x"), MIN_GRID_X)
    gy = _axis_grid(center[1], dy, s_y, "y")
    gz = _axis_grid(center[2], dz, s_z, "z")
    points = np.array([(x, y, zz) for x in gx for y in gy for zz in gz])
    cols = np.empty((bs.size * ue_template.size, len(points)), dtype=complex)
    for s, p in enumerate(points):
        ue = build_ula(ue_template.m_h, ue_template.d_h, p, ue_template.axis)
        cols[:, s] = los_channel(bs, ue, wavelength).ravel(order="F")
    return LocationDictionary(
        matrix=cols, points=points, center=center,
        half_widths=(dx, dy, dz), counts=(s_x, s_y, s_z),
    )


def build_spherical_baseline(
    bs: ArrayGeometry, angle_grid: int, distance_rings, wavelength: float
) -> SphericalDictionary:
    """Full-array near-field dictionary over a joint angle/distance grid.

    One atom per (ky, kz, r) tuple; grid corners whose cosine pair leaves
    the unit disk are projected onto it (kx = 0), keeping the stated
    ``angle_grid**2 * len(distance_rings)`` atom count.
    """
    rings = np.asarray(distance_rings, dtype=float)
    if angle_grid < 1 or rings.size == 0:
        raise ValueError("need a non-empty angle and distance grid")
    g = cosine_grid(angle_grid) if angle_grid > 1 else np.array([0.0])
    entries = []
    cols = []
    for ky in g:
        for kz in g:
            kx = np.sqrt(max(0.0, 1.0 - ky * ky - kz * kz))
            direction = np.array([kx, ky, kz])
            norm = np.linalg.norm(direction)
            direction = direction / norm
            for r in rings:
                pos = bs.center + r * direction
                cols.append(near_field_steering(bs, pos, wavelength))
                entries.append((ky, kz, r))
    return SphericalDictionary(
        matrix=np.column_stack(cols), cosines=g, distances=rings,
        entries=np.array(entries),
    )


def reciprocal_distance_rings(r_min: float, r_max: float, count: int) -> np.ndarray:
    """Distance rings uniform in 1/r over [r_min, r_max]."""
    if not (0 < r_min < r_max) or count < 1:
        raise ValueError("need 0 < r_min < r_max and count >= 1")
    if count == 1:
        return np.array([r_min])
    return 1.0 / np.linspace(1.0 / r_min, 1.0 / r_max, count)
