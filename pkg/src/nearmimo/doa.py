"""Direction-cosine refinement from subarray channel estimates.

The reconstructed subarray channel is turned into a rank-one covariance
whose Kronecker factorization over the two array axes is read off the
block structure: each M_iv x M_iv diagonal block of ``C`` repeats the
vertical factor and the block-diagonal traces carry the horizontal one.
A 1D MUSIC scan per axis then refines the LoS direction cosines beyond
the angular-grid quantization of the sparse recovery stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import far_field_steering
from .errors import DegenerateInputError

_SPECTRUM_EPS = 1e-300


@dataclass(frozen=True)
class AxisCovariance:
    """Unit-diagonal Hermitian factor of one array axis."""

    matrix: np.ndarray
    axis: str  # "horizontal" | "vertical"


@dataclass(frozen=True)
class MusicSpectrum:
    """Pseudo-spectrum over a direction-cosine grid with its refined peak."""

    grid: np.ndarray
    values: np.ndarray
    peak: float


def subarray_covariance(h_hat: np.ndarray) -> np.ndarray:
    """Rank-one covariance ``h h^H`` of a reconstructed subarray channel."""
    h = np.asarray(h_hat).reshape(-1)
    if np.linalg.norm(h) == 0:
        raise DegenerateInputError("zero channel estimate has no covariance structure")
    return np.outer(h, h.conj())


def _unit_diagonal(c: np.ndarray) -> np.ndarray:
    d = np.real(np.diag(c)).copy()
    d[d <= 0] = 1.0
    scale = 1.0 / np.sqrt(d)
    return c * np.outer(scale, scale)


def extract_axis_factors(
    c: np.ndarray, m_ih: int, m_iv: int
) -> tuple[AxisCovariance, AxisCovariance]:
    """Split a subarray covariance into horizontal and vertical factors.

    The vertical factor is the average of the M_ih diagonal
    M_iv x M_iv blocks; the horizontal factor averages, for each block
    pair (p, q), the diagonal of block (p, q).  Both are rescaled to a
    unit diagonal.  Averaging rather than reading a single block
    suppresses leakage from non-Kronecker components; for an exact
    rank-one Kronecker input every block gives the same answer.
    """
    c = np.asarray(c)
    if c.shape != (m_ih * m_iv, m_ih * m_iv):
        raise ValueError(f"covariance shape {c.shape} != ({m_ih * m_iv},)^2")
    blocks = c.reshape(m_ih, m_iv, m_ih, m_iv)
    c_v = np.mean([blocks[p, :, p, :] for p in range(m_ih)], axis=0)
    # diagonal of each (p, q) block: einsum over the within-block index
    c_h = np.einsum("pmqm->pq", blocks) / m_iv
    return (
        AxisCovariance(matrix=_unit_diagonal(c_h), axis="horizontal"),
        AxisCovariance(matrix=_unit_diagonal(c_v), axis="vertical"),
    )


def music_1d(
    cov: AxisCovariance | np.ndarray,
    m_e: int,
    d_e: float,
    wavelength: float,
    grid_points: int = 4096,
    n_sources: int = 1,
) -> MusicSpectrum:
    """1D MUSIC over direction cosines in [-1, 1].

    Eigendecomposes the axis covariance, projects steering vectors on
    the noise subspace, and refines the grid peak with a parabolic fit
    of the log pseudo-spectrum.
    """
    c = cov.matrix if isinstance(cov, AxisCovariance) else np.asarray(cov)
    if c.shape != (m_e, m_e):
        raise ValueError(f"covariance shape {c.shape} != ({m_e}, {m_e})")
    if not (1 <= n_sources < m_e):
        raise ValueError(f"n_sources must be in [1, {m_e - 1}], got {n_sources}")
    eigvals, eigvecs = np.linalg.eigh(0.5 * (c + c.conj().T))
    noise_basis = eigvecs[:, : m_e - n_sources]  # ascending eigenvalues

    grid = np.linspace(-1.0, 1.0, grid_points)
    offsets = np.arange(m_e) - (m_e - 1) / 2.0
    steering = np.exp(2j * np.pi / wavelength * d_e * offsets[:, None] * grid[None, :])
    denom = np.sum(np.abs(noise_basis.conj().T @ steering) ** 2, axis=0)
    values = 1.0 / np.maximum(denom, _SPECTRUM_EPS)

    k = int(np.argmax(values))
    peak = grid[k]
    if 0 < k < grid_points - 1:
        logs = np.log(values[k - 1:k + 2])
        curvature = logs[0] - 2 * logs[1] + logs[2]
        if curvature < 0:
            shift = 0.5 * (logs[0] - logs[2]) / curvature
            if abs(shift) <= 1.0:
                peak = grid[k] + shift * (grid[1] - grid[0])
    return MusicSpectrum(grid=grid, values=values, peak=float(np.clip(peak, -1.0, 1.0)))


def dump_spectrum(path, spectrum: MusicSpectrum) -> None:
    """Write a spectrum as two-column text (cosine, value) for plotting."""
    np.savetxt(path, np.column_stack([spectrum.grid, spectrum.values]),
               header="direction_cosine pseudo_spectrum")
