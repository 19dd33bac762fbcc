"""End-to-end reception simulation, the three-stage estimator and baselines.

Stage 1 slices the single-block observation per subarray and recovers
each subarray channel over the angular dictionary.  Stage 2 turns those
reconstructions into refined LoS direction cosines (MUSIC on the
Kronecker covariance factors) and triangulates the user center by
least squares.  Stage 3 builds a location-aided dictionary around the
estimate and recovers the full MIMO channel, by SBL by default.

Baselines: antenna-wise SIMO estimation over full-array dictionaries
(B = N pilot blocks, DFT precoder), its per-subarray variant, a
stage-1-only assembly, and a single-location eigen-dictionary LS fit.
All baselines spend the same total pilot energy as the single-block
schemes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, Scene, los_channel
from .dictionaries import (
    AngularDictionary,
    LocationDictionary,
    SphericalDictionary,
    build_location,
)
from .doa import extract_axis_factors, music_1d, subarray_covariance
from .errors import (
    DegenerateGeometryError,
    DegenerateInputError,
    InvalidDirectionError,
    NearMimoError,
    StageFailure,
)
from .geometry import ArrayGeometry, SubarrayTiling, build_ula, recover_kx
from .localization import LocationEstimate, Ray, ls_intersect
from .sensing import CombinerDesign, PrecoderDesign, uniform_precoder
from .solvers import SparseProblem, SparseSolution, omp, sbl_em

# noise-variance floor used when solving noiseless problems with SBL,
# relative to the per-sample observation energy
_NOISELESS_SBL_FLOOR = 1e-10


@dataclass(frozen=True)
class ReceptionRecord:
    """Received pilot blocks with everything needed to invert them."""

    observations: np.ndarray  # (T*M_RF, B)
    combiner: CombinerDesign
    precoder: PrecoderDesign
    power: float
    noise_var: float
    noise_seed: int

    @property
    def num_blocks(self) -> int:
        return self.observations.shape[1]


@dataclass(frozen=True)
class StageOptions:
    """Tunable knobs of the three-stage pipeline.

    ``stage1_max_atoms`` exceeds ``l_assumed + 1`` by default: the
    spherical wavefront leaks LoS energy across several plane-wave
    atoms, and the stage-2 direction refinement needs that extra
    reconstruction fidelity.
    """

    l_assumed: int = 2
    stage1_max_atoms: int = 6
    stage1_solver: str = "omp"
    stage3_solver: str = "sbl"
    stage3_omp_atoms: int = 1  # the LoS-only dictionary model is 1-sparse
    omp_residual_tol: float = 1e-3
    music_grid_points: int = 4096
    grid_half_widths: tuple[float, float, float] = (0.2, 0.2, 0.02)
    grid_counts: tuple[int, int, int] = (11, 11, 3)
    sbl_max_iters: int = 200
    sbl_tol: float = 1e-6
    sbl_gamma_floor: float = 1e-8


@dataclass
class StageOutputs:
    """Everything the three-stage run produced, with per-stage timings."""

    stage1: list[SparseSolution]
    subarray_channels: list[np.ndarray]
    directions: list
    rays: list[Ray]
    location: LocationEstimate | None
    stage3: SparseSolution | None
    h_hat: np.ndarray
    timings: dict = field(default_factory=dict)


def pilot_energy(record: ReceptionRecord) -> float:
    """Total transmitted pilot energy: each block repeats T slots."""
    w = record.precoder.w
    return record.combiner.t_slots * record.power * float(
        np.sum(np.abs(w) ** 2)
    )


def simulate_reception(
    scene: Scene,
    channel: ChannelRealization,
    combiner: CombinerDesign,
    precoder: PrecoderDesign,
    seed: int,
    power: float | None = None,
) -> ReceptionRecord:
    """Simulate the sub-connected uplink reception of all pilot blocks.

    Block tau observes ``sqrt(p) V H w_tau`` plus the per-slot combined
    antenna noise; deterministic given the seed.
    """
    h = channel.h
    m, n = h.shape
    if combiner.num_antennas != m:
        raise ValueError(f"combiner covers {combiner.num_antennas} antennas, channel has {m}")
    if precoder.w.shape[0] != n:
        raise ValueError(f"precoder drives {precoder.w.shape[0]} antennas, channel has {n}")
    p = scene.power if power is None else power
    rng = np.random.default_rng(seed)
    t = combiner.t_slots
    b = precoder.num_blocks
    signal = np.sqrt(p) * (combiner.aggregated @ (h @ precoder.w))
    obs = np.array(signal, dtype=complex)
    sigma2 = scene.noise_var
    if sigma2 > 0:
        noise = rng.standard_normal((b, t, m, 2)) * np.sqrt(sigma2 / 2.0)
        for tau in range(b):
            obs[:, tau] += combiner.apply_noise(noise[tau, ..., 0] + 1j * noise[tau, ..., 1])
    return ReceptionRecord(
        observations=obs, combiner=combiner, precoder=precoder,
        power=p, noise_var=sigma2, noise_seed=seed,
    )


def _effective_noise_var(record: ReceptionRecord) -> float:
    """Noise variance per combined sample; replaces zero with a floor."""
    sigma2 = record.noise_var * record.combiner.noise_scale
    if sigma2 > 0:
        return sigma2
    y = record.observations
    return _NOISELESS_SBL_FLOOR * float(np.mean(np.abs(y) ** 2))


def stage1(
    record: ReceptionRecord,
    dictionary: AngularDictionary,
    options: StageOptions = StageOptions(),
) -> tuple[list[SparseSolution], list[np.ndarray]]:
    """Per-subarray sparse recovery over the angular dictionary.

    Expects the single-block uniform-precoder record; returns the sparse
    solutions and the reconstructed subarray channels ``A x_hat``.
    """
    if record.precoder.kind != "uniform" or record.num_blocks != 1:
        raise ValueError("stage 1 runs on the single-block uniform-precoder record")
    combiner = record.combiner
    n_ue = record.precoder.w.shape[0]
    scale = np.sqrt(record.power / n_ue)
    y = record.observations[:, 0]
    max_atoms = max(options.stage1_max_atoms, options.l_assumed + 1)
    solutions = []
    channels = []
    for i in range(combiner.tiling.num_tiles):
        y_i = y[combiner.tile_rows(i)]
        a_bar = scale * (combiner.tile_slices[i] @ dictionary.matrix)
        problem = SparseProblem(a_bar, y_i)
        if options.stage1_solver == "omp":
            sol = omp(problem, max_atoms=max_atoms, residual_tol=options.omp_residual_tol)
        elif options.stage1_solver == "sbl":
            sol, _state = sbl_em(
                problem, sigma2=_effective_noise_var(record),
                max_iters=options.sbl_max_iters, tol=options.sbl_tol,
                gamma_floor=options.sbl_gamma_floor,
                track_evidence=False, prune=True,
            )
        else:
            raise ValueError(f"unknown stage-1 solver {options.stage1_solver!r}")
        solutions.append(sol)
        channels.append(dictionary.matrix @ sol.coefficients)
    return solutions, channels


def stage2(
    subarray_channels,
    tiling: SubarrayTiling,
    wavelength: float,
    options: StageOptions = StageOptions(),
) -> tuple[LocationEstimate, list, list[Ray]]:
    """Refine per-subarray LoS directions and triangulate the user center.

    Tiles whose covariance degenerates or whose cosines leave the unit
    disk are dropped; at least two usable rays are required.
    """
    directions = []
    rays = []
    for h_i, tile in zip(subarray_channels, tiling.tiles):
        geom = tile.geometry
        try:
            cov = subarray_covariance(h_i)
            c_h, c_v = extract_axis_factors(cov, geom.m_h, geom.m_v)
            k_y = music_1d(
                c_h, geom.m_h, geom.d_h, wavelength,
                grid_points=options.music_grid_points, n_sources=1,
            ).peak
            k_z = music_1d(
                c_v, geom.m_v, geom.d_v, wavelength,
                grid_points=options.music_grid_points, n_sources=1,
            ).peak
            k = recover_kx(k_y, k_z)
        except (DegenerateInputError, InvalidDirectionError):
            directions.append(None)
            continue
        directions.append(k)
        rays.append(Ray(origin=geom.center, direction=k))
    if len(rays) < 2:
        raise StageFailure("stage2", f"only {len(rays)} usable rays")
    try:
        estimate = ls_intersect(rays)
    except DegenerateGeometryError as exc:
        raise StageFailure("stage2", str(exc)) from exc
    return estimate, directions, rays


def location_operator(
    record: ReceptionRecord, dict_matrix: np.ndarray, m: int, n: int
) -> np.ndarray:
    """Map columns of a vec(H) dictionary through the reception model.

    For each column, computes ``sqrt(p) V (unvec(col) w)``, the
    single-block observation that channel would produce.
    """
    w = record.precoder.w[:, 0]
    h_cols = dict_matrix.reshape(m, n, -1, order="F")
    hw = np.einsum("mns,n->ms", h_cols, w)
    return np.sqrt(record.power) * (record.combiner.aggregated @ hw)


def stage3(
    record: ReceptionRecord,
    p_hat,
    bs: ArrayGeometry,
    ue_template: ArrayGeometry,
    wavelength: float,
    options: StageOptions = StageOptions(),
) -> tuple[SparseSolution, np.ndarray, LocationDictionary]:
    """Location-aided recovery of the full MIMO channel.

    Builds the location dictionary around ``p_hat``, forms the
    equivalent sensing matrix of the single-block record, solves with
    SBL (or OMP for the ablation), and returns the channel estimate
    ``unvec(A_L x_hat)``.
    """
    if record.num_blocks != 1:
        raise ValueError("stage 3 consumes the single-block record")
    dx, dy, dz = options.grid_half_widths
    sx, sy, sz = options.grid_counts
    loc_dict = build_location(p_hat, dx, dy, dz, sx, sy, sz, bs, ue_template, wavelength)
    m, n = bs.size, ue_template.size
    a_bar = location_operator(record, loc_dict.matrix, m, n)
    problem = SparseProblem(a_bar, record.observations[:, 0])
    if options.stage3_solver == "sbl":
        sol, _state = sbl_em(
            problem, sigma2=_effective_noise_var(record),
            max_iters=options.sbl_max_iters, tol=options.sbl_tol,
            gamma_floor=options.sbl_gamma_floor,
            track_evidence=False, prune=True,
        )
    elif options.stage3_solver == "omp":
        sol = omp(problem, max_atoms=min(options.stage3_omp_atoms, loc_dict.num_atoms),
                  residual_tol=options.omp_residual_tol)
    else:
        raise ValueError(f"unknown stage-3 solver {options.stage3_solver!r}")
    h_hat = (loc_dict.matrix @ sol.coefficients).reshape(m, n, order="F")
    return sol, h_hat, loc_dict


def run_three_stage(
    scene: Scene,
    channel: ChannelRealization,
    combiner: CombinerDesign,
    dictionary: AngularDictionary,
    seed: int,
    options: StageOptions = StageOptions(),
) -> StageOutputs:
    """Simulate one single-block reception and run all three stages."""
    precoder = uniform_precoder(scene.ue.size)
    record = simulate_reception(scene, channel, combiner, precoder, seed)
    timings = {}

    tic = time.perf_counter()
    try:
        solutions, channels = stage1(record, dictionary, options)
    except NearMimoError as exc:
        raise StageFailure("stage1", str(exc)) from exc
    timings["stage1"] = time.perf_counter() - tic

    tic = time.perf_counter()
    estimate, directions, rays = stage2(
        channels, combiner.tiling, scene.wavelength, options
    )
    timings["stage2"] = time.perf_counter() - tic

    tic = time.perf_counter()
    try:
        sol3, h_hat, _loc_dict = stage3(
            record, estimate.point, scene.bs, scene.ue, scene.wavelength, options
        )
    except NearMimoError as exc:
        raise StageFailure("stage3", str(exc)) from exc
    timings["stage3"] = time.perf_counter() - tic

    return StageOutputs(
        stage1=solutions, subarray_channels=channels, directions=directions,
        rays=rays, location=estimate, stage3=sol3, h_hat=h_hat, timings=timings,
    )


def stage1_only_estimate(
    subarray_channels, tiling: SubarrayTiling, n_ue: int
) -> np.ndarray:
    """Assemble a full M x N estimate from stage-1 reconstructions alone.

    Stage 1 estimates the column sum ``H_i 1_N`` of each tile; lacking
    any per-column information, the sum is attributed equally:
    ``H_i ≈ h_i 1_N^T / N``.
    """
    m = tiling.parent.size
    h_hat = np.zeros((m, n_ue), dtype=complex)
    for h_i, tile in zip(subarray_channels, tiling.tiles):
        h_hat[tile.antenna_indices, :] = np.outer(h_i, np.ones(n_ue)) / n_ue
    return h_hat


def baseline_antenna_wise(
    scene: Scene,
    channel: ChannelRealization,
    combiner: CombinerDesign,
    dictionary: AngularDictionary | SphericalDictionary,
    precoder: PrecoderDesign,
    seed: int,
    l_assumed: int = 2,
    per_subarray: bool = False,
) -> np.ndarray:
    """Antenna-wise SIMO estimation over a full-array dictionary.

    Uses B = N pilot blocks with the DFT precoder; per-block power is
    ``p/N`` so the total pilot energy matches the single-block schemes.
    Right-multiplying by W^H separates the user antennas; each SIMO
    channel is recovered independently with OMP and the estimate is
    assembled column by column.  With ``per_subarray=True`` the
    dictionary is applied tile by tile instead of to the whole array.
    """
    n = scene.ue.size
    if precoder.kind != "dft" or precoder.num_blocks != n:
        raise ValueError("antenna-wise baseline needs the N-block DFT precoder")
    record = simulate_reception(
        scene, channel, combiner, precoder, seed, power=scene.power / n
    )
    per_antenna = record.observations @ precoder.w.conj().T  # (T*M_RF, N)
    scale = np.sqrt(record.power)
    max_atoms = l_assumed + 1
    m = scene.bs.size
    h_hat = np.zeros((m, n), dtype=complex)
    if per_subarray:
        for i in range(combiner.tiling.num_tiles):
            tile = combiner.tiling.tiles[i]
            a_bar = scale * (combiner.tile_slices[i] @ dictionary.matrix)
            rows = combiner.tile_rows(i)
            for col in range(n):
                sol = omp(SparseProblem(a_bar, per_antenna[rows, col]),
                          max_atoms=max_atoms, residual_tol=1e-3)
                h_hat[tile.antenna_indices, col] = dictionary.matrix @ sol.coefficients
    else:
        a_bar = scale * (combiner.aggregated @ dictionary.matrix)
        for col in range(n):
            sol = omp(SparseProblem(a_bar, per_antenna[:, col]),
                      max_atoms=max_atoms, residual_tol=1e-3)
            h_hat[:, col] = dictionary.matrix @ sol.coefficients
    return h_hat


def baseline_eigen_dictionary(
    record: ReceptionRecord,
    p_hat,
    bs: ArrayGeometry,
    ue_template: ArrayGeometry,
    wavelength: float,
    rank: int | None = None,
) -> np.ndarray:
    """LS fit over the eigenbasis of the LoS channel at one location.

    Builds ``H_los(p_hat)``, keeps its top ``rank`` singular triplets as
    a vec(H) basis, and projects the single-block observation onto it.
    """
    p_hat = np.asarray(p_hat, dtype=float).reshape(3)
    ue = build_ula(ue_template.m_h, ue_template.d_h, p_hat, ue_template.axis)
    h0 = los_channel(bs, ue, wavelength)
    u, s, vh = np.linalg.svd(h0, full_matrices=False)
    r = min(rank or s.size, s.size)
    basis = np.column_stack([
        np.outer(u[:, k], vh[k, :]).ravel(order="F") for k in range(r)
    ])
    g = location_operator(record, basis, bs.size, ue_template.size)
    coef, *_ = np.linalg.lstsq(g, record.observations[:, 0], rcond=None)
    return (basis @ coef).reshape(bs.size, ue_template.size, order="F")
