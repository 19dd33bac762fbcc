"""Ground-truth channel synthesis: spherical-wave LoS plus scattered paths.

The LoS MIMO channel between two arrays has entries
``(1/r_mn) * exp(-j*2*pi*r_mn/lambda)`` over the exact antenna-pair
distances, so it is full column rank in the near field.  Scattered paths
are rank-one: a near-field steering vector at the scatterer times a
far-field steering vector at the (small) user array.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularGeometryError
from .geometry import ArrayGeometry

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class PathParams:
    """One scattered path: gain, scatterer position, user-side AoD.

    ``gain=None`` asks :func:`synthesize` to draw a complex Gaussian gain
    scaled by the scene's LoS-to-NLoS power ratio.
    """

    position: np.ndarray
    aod: float
    gain: complex | None = None
    index: int = 1


@dataclass(frozen=True)
class Scene:
    """Everything needed to synthesize one uplink channel realization."""

    bs: ArrayGeometry
    ue: ArrayGeometry
    wavelength: float
    paths: tuple[PathParams, ...] = ()
    power: float = 1.0
    noise_var: float = 0.0
    los_nlos_ratio_db: float = 20.0

    def with_noise_var(self, noise_var: float) -> "Scene":
        return replace(self, noise_var=noise_var)


@dataclass(frozen=True)
class ChannelRealization:
    """A synthesized channel with its ground truth."""

    h: np.ndarray
    h_los: np.ndarray
    h_nlos: np.ndarray
    scene: Scene
    paths: tuple[PathParams, ...]
    seed: int | None = None


def pairwise_distances(a: ArrayGeometry, b: ArrayGeometry) -> np.ndarray:
    """Euclidean distances between every antenna pair, shape (a.size, b.size)."""
    diff = a.positions[:, None, :] - b.positions[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def los_channel(bs: ArrayGeometry, ue: ArrayGeometry, wavelength: float) -> np.ndarray:
    """Spherical-wave LoS channel, entry (m, n) = exp(-j*2*pi*r/λ)/r."""
    r = pairwise_distances(bs, ue)
    if np.any(r <= 0):
        raise SingularGeometryError("coincident BS/UE antennas")
    return np.exp(-2j * np.pi * r / wavelength) / r


def near_field_steering(geom: ArrayGeometry, source, wavelength: float) -> np.ndarray:
    """Unit-modulus spherical steering vector toward a point source."""
    source = np.asarray(source, dtype=float).reshape(3)
    r = np.linalg.norm(geom.positions - source, axis=1)
    if np.any(r <= 0):
        raise SingularGeometryError("source coincides with an antenna")
    return np.exp(-2j * np.pi * r / wavelength)


def far_field_steering(m_e: int, d_e: float, cosine: float, wavelength: float) -> np.ndarray:
    """Plane-wave steering vector of one array axis.

    Entry m (1-based) is ``exp(j*(2π/λ)*ϖ*(-(M_e-1)/2 + m - 1)*Δ_e)`` for
    direction cosine ``ϖ``.
    """
    offsets = np.arange(m_e) - (m_e - 1) / 2.0
    return np.exp(2j * np.pi / wavelength * cosine * offsets * d_e)


def planar_far_field_steering(
    m_h: int, m_v: int, d_h: float, d_v: float,
    cos_h: float, cos_v: float, wavelength: float,
) -> np.ndarray:
    """Kronecker plane-wave steering of a planar array, ``a_h ⊗ a_v``."""
    return np.kron(
        far_field_steering(m_h, d_h, cos_h, wavelength),
        far_field_steering(m_v, d_v, cos_v, wavelength),
    )


def synthesize(scene: Scene, rng_seed: int) -> ChannelRealization:
    """Draw one channel realization.

    The LoS part is deterministic from the geometry.  Each scattered path
    adds ``α * h(p_scat) * a_ue(sin ψ)^H``; gains left unset in the scene
    are drawn as CN(0, ρ) with ρ chosen so the total expected NLoS power
    sits ``los_nlos_ratio_db`` below the LoS power.
    """
    rng = np.random.default_rng(rng_seed)
    h_los = los_channel(scene.bs, scene.ue, scene.wavelength)
    m, n = h_los.shape
    h_nlos = np.zeros_like(h_los)
    num_paths = len(scene.paths)
    resolved = []
    if num_paths:
        los_power = np.linalg.norm(h_los, "fro") ** 2
        rho = los_power * 10.0 ** (-scene.los_nlos_ratio_db / 10.0) / (num_paths * m * n)
        for path in scene.paths:
            gain = path.gain
            if gain is None:
                g = rng.standard_normal(2)
                gain = np.sqrt(rho / 2.0) * complex(g[0], g[1])
            bs_vec = near_field_steering(scene.bs, path.position, scene.wavelength)
            ue_vec = far_field_steering(
                scene.ue.m_h, scene.ue.d_h, np.sin(path.aod), scene.wavelength
            )
            h_nlos = h_nlos + gain * np.outer(bs_vec, ue_vec.conj())
            resolved.append(replace(path, gain=gain))
    return ChannelRealization(
        h=h_los + h_nlos, h_los=h_los, h_nlos=h_nlos,
        scene=scene, paths=tuple(resolved), seed=rng_seed,
    )
