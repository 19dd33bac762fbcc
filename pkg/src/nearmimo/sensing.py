"""Analog combiner and precoder design for sub-connected arrays.

Each RF chain drives ``M_s`` antennas through phase shifters, so every
per-slot combiner ``V_t`` is block diagonal with unit-modulus rows.  The
designed combiner draws those rows from strided rows of a DFT matrix,
which makes the aggregated combiner column-orthonormal
(``V^H V = I_M``), makes each per-tile slice column-orthonormal, and
keeps the effective received noise white.

With entry modulus ``1/sqrt(T)`` the per-slot rows satisfy
``V_t V_t^H = (M_s/T) I``; for the nominal ``T = M_s`` this is exactly
the identity, so the effective noise keeps covariance ``sigma^2 I``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDesignError
from .geometry import SubarrayTiling

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class CombinerDesign:
    """Sub-connected analog combiner over T time slots.

    ``slot_combiners[t]`` is the M_RF x M matrix applied in slot t, in
    the parent array's canonical antenna order.  ``aggregated`` stacks
    the slots into the (T*M_RF) x M sensing combiner.  ``tile_slices[i]``
    is the (T*M_rf_i) x M_i per-subarray combiner acting on tile i's
    antennas in within-tile order.  ``dft_blocks[m]`` holds the T x M_s
    row block assigned to RF chain m of every tile (empty for random
    designs).
    """

    tiling: SubarrayTiling
    t_slots: int
    m_s: int
    m_rf_per_tile: int
    slot_combiners: tuple[np.ndarray, ...]
    aggregated: np.ndarray
    tile_slices: tuple[np.ndarray, ...]
    dft_blocks: np.ndarray
    entry_modulus: float
    designed: bool

    @property
    def m_rf_total(self) -> int:
        return self.m_rf_per_tile * self.tiling.num_tiles

    @property
    def num_antennas(self) -> int:
        return self.tiling.parent.size

    @property
    def noise_scale(self) -> float:
        """Variance multiplier of the effective noise: ``M_s * modulus^2``."""
        return self.m_s * self.entry_modulus ** 2

    def tile_rows(self, i: int) -> np.ndarray:
        """Row indices of tile ``i``'s RF chains within the aggregated output."""
        start = i * self.m_rf_per_tile
        per_slot = np.arange(start, start + self.m_rf_per_tile)
        return (np.arange(self.t_slots)[:, None] * self.m_rf_total + per_slot).ravel()

    def blockdiag_aggregated(self) -> np.ndarray:
        """The (T*M_RF) x (T*M) block-diagonal combiner acting on stacked noise."""
        t, m_rf, m = self.t_slots, self.m_rf_total, self.num_antennas
        out = np.zeros((t * m_rf, t * m), dtype=complex)
        for k, v_t in enumerate(self.slot_combiners):
            out[k * m_rf:(k + 1) * m_rf, k * m:(k + 1) * m] = v_t
        return out

    def apply_noise(self, noise: np.ndarray) -> np.ndarray:
        """Combine per-slot antenna noise, shape (T, M) -> (T*M_RF,).

        Equivalent to ``blockdiag_aggregated() @ noise.ravel()`` without
        materializing the block-diagonal matrix.
        """
        return np.concatenate(
            [v_t @ noise[k] for k, v_t in enumerate(self.slot_combiners)]
        )

    def verify(self, tol: float = _ORTHO_TOL) -> None:
        """Check the algebraic guarantees of the designed construction.

        Raises ``InfeasibleDesignError`` if any check fails.
        """
        gram_target = self.t_slots * self.entry_modulus ** 2
        v = self.aggregated
        err = np.linalg.norm(v.conj().T @ v - gram_target * np.eye(v.shape[1]))
        if err > tol:
            raise InfeasibleDesignError(f"aggregated combiner Gram error {err:.2e}")
        for i, slc in enumerate(self.tile_slices):
            err = np.linalg.norm(slc.conj().T @ slc - gram_target * np.eye(slc.shape[1]))
            if err > tol:
                raise InfeasibleDesignError(f"tile {i} combiner Gram error {err:.2e}")
        row_target = self.noise_scale
        for k, v_t in enumerate(self.slot_combiners):
            err = np.linalg.norm(v_t @ v_t.conj().T - row_target * np.eye(v_t.shape[0]))
            if err > tol:
                raise InfeasibleDesignError(f"slot {k} row Gram error {err:.2e}")
        if self.dft_blocks.size:
            for m, f_m in enumerate(self.dft_blocks):
                err = np.linalg.norm(
                    f_m.conj().T @ f_m - gram_target * np.eye(self.m_s)
                )
                if err > tol:
                    raise InfeasibleDesignError(f"DFT block {m} Gram error {err:.2e}")


@dataclass(frozen=True)
class PrecoderDesign:
    """User-side analog precoder, one unit-modulus column per pilot block."""

    w: np.ndarray
    kind: str

    @property
    def num_blocks(self) -> int:
        return self.w.shape[1]


def _chain_layout(tiling: SubarrayTiling, m_rf_per_tile: int) -> tuple[int, int]:
    m_i = tiling.tiles[0].geometry.size
    for tile in tiling.tiles:
        if tile.geometry.size != m_i:
            raise ValueError("tiles must be equally sized for a common chain layout")
    if m_i % m_rf_per_tile:
        raise ValueError(
            f"RF chains per tile ({m_rf_per_tile}) must divide tile size ({m_i})"
        )
    return m_i, m_i // m_rf_per_tile


def _assemble(tiling, t_slots, m_rf_per_tile, m_s, chain_rows) -> tuple:
    """Place per-chain rows into slot combiners and per-tile slices.

    ``chain_rows[i][m]`` is the T x M_s row block of chain m in tile i.
    """
    num_tiles = tiling.num_tiles
    m_rf_total = m_rf_per_tile * num_tiles
    m_total = tiling.parent.size
    m_i = tiling.tiles[0].geometry.size

    slots = [np.zeros((m_rf_total, m_total), dtype=complex) for _ in range(t_slots)]
    slices = [np.zeros((t_slots * m_rf_per_tile, m_i), dtype=complex) for _ in range(num_tiles)]
    for i, tile in enumerate(tiling.tiles):
        for m in range(m_rf_per_tile):
            cols = tile.antenna_indices[m * m_s:(m + 1) * m_s]
            for t in range(t_slots):
                slots[t][i * m_rf_per_tile + m, cols] = chain_rows[i][m][t]
                slices[i][t * m_rf_per_tile + m, m * m_s:(m + 1) * m_s] = chain_rows[i][m][t]
    aggregated = np.vstack(slots)
    return tuple(slots), aggregated, tuple(slices)


def design_combiner(
    t_slots: int, tiling: SubarrayTiling, m_rf_per_tile: int
) -> CombinerDesign:
    """Build the DFT-based combiner with verified orthogonality.

    Chain ``m`` of every tile takes rows ``m, M_rf+m, ..., (T-1)M_rf+m``
    of the first ``M_s`` columns of the (T*M_rf)-point DFT matrix scaled
    to entry modulus ``1/sqrt(T)``.  Requires ``T >= M_s``.
    """
    m_i, m_s = _chain_layout(tiling, m_rf_per_tile)
    if t_slots < m_s:
        raise InfeasibleDesignError(
            f"need T >= M_s for orthogonal sub-connected sensing, got T={t_slots}, M_s={m_s}"
        )
    order = t_slots * m_rf_per_tile
    p = np.arange(order)
    dft = np.exp(-2j * np.pi * np.outer(p, p[:m_s]) / order) / np.sqrt(t_slots)
    blocks = np.stack([
        dft[np.arange(t_slots) * m_rf_per_tile + m, :]
        for m in range(m_rf_per_tile)
    ])
    chain_rows = [blocks] * tiling.num_tiles
    slots, aggregated, slices = _assemble(tiling, t_slots, m_rf_per_tile, m_s, chain_rows)
    design = CombinerDesign(
        tiling=tiling, t_slots=t_slots, m_s=m_s, m_rf_per_tile=m_rf_per_tile,
        slot_combiners=slots, aggregated=aggregated, tile_slices=slices,
        dft_blocks=blocks, entry_modulus=1.0 / np.sqrt(t_slots), designed=True,
    )
    design.verify()
    return design


def random_combiner(
    t_slots: int, tiling: SubarrayTiling, m_rf_per_tile: int, seed: int
) -> CombinerDesign:
    """Baseline combiner with i.i.d. uniform phases of modulus 1/sqrt(M_s).

    No orthogonality is asserted; used to quantify what the structured
    design buys.
    """
    m_i, m_s = _chain_layout(tiling, m_rf_per_tile)
    rng = np.random.default_rng(seed)
    modulus = 1.0 / np.sqrt(m_s)
    chain_rows = [
        modulus * np.exp(
            2j * np.pi * rng.random((m_rf_per_tile, t_slots, m_s))
        )
        for _ in range(tiling.num_tiles)
    ]
    slots, aggregated, slices = _assemble(tiling, t_slots, m_rf_per_tile, m_s, chain_rows)
    return CombinerDesign(
        tiling=tiling, t_slots=t_slots, m_s=m_s, m_rf_per_tile=m_rf_per_tile,
        slot_combiners=slots, aggregated=aggregated, tile_slices=slices,
        dft_blocks=np.empty((0, t_slots, m_s)), entry_modulus=modulus, designed=False,
    )


def design_precoder_dft(n: int) -> PrecoderDesign:
    """N-column DFT precoder for antenna-wise estimation; W W^H = I_N."""
    if n < 1:
        raise ValueError(f"need at least one user antenna, got {n}")
    idx = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)
    return PrecoderDesign(w=w, kind="dft")


def uniform_precoder(n: int) -> PrecoderDesign:
    """Single-block all-ones precoder ``1_N / sqrt(N)``."""
    if n < 1:
        raise ValueError(f"need at least one user antenna, got {n}")
    return PrecoderDesign(w=np.full((n, 1), 1.0 / np.sqrt(n), dtype=complex), kind="uniform")


def empirical_noise_covariance(
    design: CombinerDesign, sigma2: float, n_samples: int, seed: int,
    batch: int = 200,
) -> np.ndarray:
    """Monte-Carlo covariance of the combined noise ``Vhat @ n``.

    Draws ``n ~ CN(0, sigma2 I_TM)`` and accumulates the sample
    covariance of the (T*M_RF)-dimensional combined noise.
    """
    t, m = design.t_slots, design.num_antennas
    dim = t * design.m_rf_total
    rng = np.random.default_rng(seed)
    cov = np.zeros((dim, dim), dtype=complex)
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        noise = rng.standard_normal((t, m, nb)) + 1j * rng.standard_normal((t, m, nb))
        noise *= np.sqrt(sigma2 / 2.0)
        out = np.concatenate(
            [design.slot_combiners[k] @ noise[k] for k in range(t)], axis=0
        )
        cov += out @ out.conj().T
        done += nb
    return cov / n_samples
