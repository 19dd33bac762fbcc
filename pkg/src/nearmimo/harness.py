"""Experiment configuration, metrics, and the Monte-Carlo sweep engine.

A sweep walks (method, SNR point, trial) cells.  Each cell derives its
own seed from the base seed and the cell key, draws a scene (user
center uniform in the configured box, scatterers uniform in theirs),
synthesizes the channel, sets the noise variance from the SNR
definition ``SNR = p * ||H||_F^2 / (M * N * sigma^2)``, runs the
method, and records NMSE / localization error.  Failures become rows
with a status string instead of aborting the sweep.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import SPEED_OF_LIGHT, PathParams, Scene, synthesize
from .dictionaries import (
    build_angular,
    build_spherical_baseline,
    reciprocal_distance_rings,
)
from .errors import NearMimoError
from .geometry import ArrayGeometry, build_ula, build_upa, partition
from .pipeline import (
    StageOptions,
    baseline_antenna_wise,
    baseline_eigen_dictionary,
    run_three_stage,
    simulate_reception,
    stage1,
    stage1_only_estimate,
    stage2,
    uniform_precoder,
)
from .sensing import design_combiner, design_precoder_dft, random_combiner

METHODS = (
    "proposed-sbl",
    "proposed-omp3",
    "stage1-only",
    "antenna-wise-dft",
    "antenna-wise-spherical",
    "antenna-wise-subarray-dft",
    "eigen-dictionary",
    "random-combiner",
)

CSV_COLUMNS = (
    "method", "snr_db", "trial", "seed", "nmse_db", "rmse_m",
    "t_stage1_ms", "t_stage2_ms", "t_stage3_ms", "status",
)

AGGREGATE_COLUMNS = (
    "method", "snr_db", "n_trials", "n_ok",
    "nmse_mean", "nmse_mean_db", "nmse_std", "rmse_m",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: geometry, scene statistics, solvers, sweep grid."""

    schema: int = 1
    profile: str = "desk"
    carrier_freq_hz: float = 6.8e9
    bs_m_h: int = 12
    bs_m_v: int = 24
    spacing: str = "half_wavelength"  # or "aperture"
    aperture_m: tuple[float, float] = (0.5, 1.5)
    tiles_h: int = 2
    tiles_v: int = 2
    t_slots: int = 6
    m_s: int = 6
    m_rf: int | None = None  # informational; derived from m_s when None
    n_ue: int = 2
    ue_orientation: tuple[float, float, float] = (0.0, 1.0, 0.0)
    num_nlos: int = 2
    los_nlos_ratio_db: float = 30.0
    power: float = 1.0
    user_box: tuple[tuple[float, float], ...] = ((2.0, 5.0), (-2.0, 2.0), (-1.0, -1.0))
    scatter_box: tuple[tuple[float, float], ...] = ((0.8, 4.0), (-2.5, 2.5), (-2.0, 0.0))
    z_grid: int = 32
    l_assumed: int = 2
    stage1_max_atoms: int = 6
    stage1_solver: str = "omp"
    stage3_omp_atoms: int = 1
    omp_residual_tol: float = 1e-3
    music_grid_points: int = 4096
    grid_half_widths: tuple[float, float, float] = (0.4, 0.4, 0.05)
    grid_counts: tuple[int, int, int] = (5, 5, 3)
    sbl_max_iters: int = 40
    sbl_tol: float = 1e-5
    sbl_gamma_floor: float = 1e-8
    baseline_z_grid: int = 32
    spherical_angle_grid: int = 32
    spherical_rings: tuple[float, float, int] = (2.0, 10.0, 4)
    eigen_rank: int | None = None
    methods: tuple[str, ...] = METHODS
    snr_db: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0)
    trials: int = 50
    base_seed: int = 20240817
    workers: int = 1

    def __post_init__(self):
        if self.spacing not in ("half_wavelength", "aperture"):
            raise ValueError(f"unknown spacing mode {self.spacing!r}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        m = self.bs_m_h * self.bs_m_v
        if m % self.m_s:
            raise ValueError(f"M_s={self.m_s} must divide M={m}")
        if self.m_rf is not None and self.m_rf * self.m_s != m:
            warnings.warn(
                f"inconsistent RF chain count: M_RF*M_s = {self.m_rf * self.m_s} != M = {m}; "
                f"using M_RF = {m // self.m_s}",
                stacklevel=2,
            )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def m_rf_effective(self) -> int:
        return self.bs_m_h * self.bs_m_v // self.m_s

    def spacings(self) -> tuple[float, float]:
        if self.spacing == "aperture":
            return (
                self.aperture_m[0] / max(self.bs_m_h - 1, 1),
                self.aperture_m[1] / max(self.bs_m_v - 1, 1),
            )
        return self.wavelength / 2, self.wavelength / 2

    def stage_options(self) -> StageOptions:
        return StageOptions(
            l_assumed=self.l_assumed,
            stage1_max_atoms=self.stage1_max_atoms,
            stage1_solver=self.stage1_solver,
            stage3_omp_atoms=self.stage3_omp_atoms,
            omp_residual_tol=self.omp_residual_tol,
            music_grid_points=self.music_grid_points,
            grid_half_widths=self.grid_half_widths,
            grid_counts=self.grid_counts,
            sbl_max_iters=self.sbl_max_iters,
            sbl_tol=self.sbl_tol,
            sbl_gamma_floor=self.sbl_gamma_floor,
        )

    def to_dict(self) -> dict:
        def convert(v):
            if isinstance(v, tuple):
                return [convert(x) for x in v]
            return v

        return {k: convert(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        def to_tuple(v):
            if isinstance(v, list):
                return tuple(to_tuple(x) for x in v)
            return v

        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: to_tuple(v) for k, v in data.items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


def desk_profile(**overrides) -> ExperimentConfig:
    """Reduced geometry that sweeps quickly on a laptop."""
    return replace(ExperimentConfig(), **overrides) if overrides else ExperimentConfig()


def paper_profile(**overrides) -> ExperimentConfig:
    """Full-scale geometry; slow, intended for overnight sweeps."""
    cfg = ExperimentConfig(
        profile="paper",
        bs_m_h=16, bs_m_v=48, tiles_h=2, tiles_v=4,
        t_slots=6, m_s=6, n_ue=4, z_grid=64,
        baseline_z_grid=64,
        user_box=((5.0, 15.0), (-5.0, 5.0), (-1.0, -1.0)),
        scatter_box=((2.0, 12.0), (-5.0, 5.0), (-2.0, 0.0)),
        los_nlos_ratio_db=20.0,
        grid_half_widths=(0.2, 0.2, 0.02),
        grid_counts=(11, 11, 3),
        sbl_max_iters=200,
        sbl_tol=1e-6,
        spherical_rings=(5.0, 25.0, 4),
        trials=200,
    )
    return replace(cfg, **overrides) if overrides else cfg


def nmse(h_hat: np.ndarray, h: np.ndarray) -> float:
    """Normalized channel error ``||H_hat - H||_F^2 / ||H||_F^2``."""
    h_hat = np.asarray(h_hat)
    h = np.asarray(h)
    if h_hat.shape != h.shape:
        raise ValueError(f"shape mismatch: {h_hat.shape} vs {h.shape}")
    denom = np.linalg.norm(h) ** 2
    if denom == 0:
        raise ValueError("reference channel is identically zero")
    return float(np.linalg.norm(h_hat - h) ** 2 / denom)


def rmse(points_hat, points) -> float:
    """Root-mean-square localization error in meters."""
    points_hat = np.atleast_2d(np.asarray(points_hat, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points_hat.shape != points.shape or points_hat.size == 0:
        raise ValueError("need equal-length non-empty point lists")
    return float(np.sqrt(np.mean(np.sum((points_hat - points) ** 2, axis=1))))


def derive_seed(base_seed: int, method: str, snr_db: float, trial: int) -> int:
    """Stable per-cell seed: base XOR a cryptographic hash of the key."""
    key = f"{method}|{snr_db:.6g}|{trial}".encode()
    digest = hashlib.sha256(key).digest()
    return (int(base_seed) ^ int.from_bytes(digest[:8], "little")) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class TrialRow:
    method: str
    snr_db: float
    trial: int
    seed: int
    nmse: float
    loc_error_m: float
    t_stage1_ms: float
    t_stage2_ms: float
    t_stage3_ms: float
    status: str = "ok"


@dataclass
class ResultTable:
    """Per-trial rows plus aggregates recomputable from them."""

    config: ExperimentConfig
    rows: list[TrialRow] = field(default_factory=list)

    def sorted_rows(self) -> list[TrialRow]:
        method_order = {m: i for i, m in enumerate(self.config.methods)}
        snr_order = {s: i for i, s in enumerate(self.config.snr_db)}
        return sorted(
            self.rows,
            key=lambda r: (method_order[r.method], snr_order[r.snr_db], r.trial),
        )

    def aggregates(self) -> list[dict]:
        out = []
        for method in self.config.methods:
            for snr in self.config.snr_db:
                cell = [r for r in self.rows if r.method == method and r.snr_db == snr]
                ok = [r for r in cell if r.status == "ok"]
                nmses = np.array([r.nmse for r in ok if np.isfinite(r.nmse)])
                locs = np.array([r.loc_error_m for r in ok if np.isfinite(r.loc_error_m)])
                agg = {
                    "method": method,
                    "snr_db": snr,
                    "n_trials": len(cell),
                    "n_ok": len(ok),
                    "nmse_mean": float(nmses.mean()) if nmses.size else float("nan"),
                    "nmse_mean_db": (
                        float(10 * np.log10(nmses.mean())) if nmses.size and nmses.mean() > 0
                        else float("nan")
                    ),
                    "nmse_std": float(nmses.std()) if nmses.size else float("nan"),
                    "rmse_m": (
                        float(np.sqrt(np.mean(locs ** 2))) if locs.size else float("nan")
                    ),
                }
                out.append(agg)
        return out

    def failure_summary(self) -> dict:
        failed = [r for r in self.rows if r.status != "ok"]
        return {
            "total": len(self.rows),
            "failed": len(failed),
            "by_status": {
                s: sum(1 for r in failed if r.status == s)
                for s in sorted({r.status for r in failed})
            },
        }

    def to_csv(self, path, include_timings: bool = False) -> None:
        """Write per-trial rows.

        Timing columns exist always but are zeroed unless
        ``include_timings`` is set: wall-clock values vary run to run
        and would break byte-for-byte reproducibility of the artifact.
        """
        lines = [",".join(CSV_COLUMNS)]
        for r in self.sorted_rows():
            nmse_db = 10 * np.log10(r.nmse) if np.isfinite(r.nmse) and r.nmse > 0 else float("nan")
            t1, t2, t3 = (
                (r.t_stage1_ms, r.t_stage2_ms, r.t_stage3_ms)
                if include_timings else (0.0, 0.0, 0.0)
            )
            lines.append(",".join([
                r.method, _fmt(r.snr_db), str(r.trial), str(r.seed),
                _fmt(nmse_db), _fmt(r.loc_error_m),
                _fmt(t1), _fmt(t2), _fmt(t3), r.status,
            ]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def aggregates_to_csv(self, path) -> None:
        lines = [",".join(AGGREGATE_COLUMNS)]
        for agg in self.aggregates():
            lines.append(",".join(_fmt(agg[c]) if not isinstance(agg[c], str) else agg[c]
                                   for c in AGGREGATE_COLUMNS))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json(self, path, include_timings: bool = False) -> None:
        rows = []
        for r in self.sorted_rows():
            d = asdict(r)
            if not include_timings:
                d["t_stage1_ms"] = d["t_stage2_ms"] = d["t_stage3_ms"] = 0.0
            rows.append(d)
        payload = {
            "schema": self.config.schema,
            "config": self.config.to_dict(),
            "rows": rows,
            "aggregates": self.aggregates(),
            "failures": self.failure_summary(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return "nan"
    return format(float(x), ".10g")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


class SweepContext:
    """Immutable per-config assets shared by every trial."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        d_h, d_v = config.spacings()
        self.bs = build_upa(config.bs_m_h, config.bs_m_v, d_h, d_v, (0.0, 0.0, 0.0))
        self.tiling = partition(self.bs, config.tiles_h, config.tiles_v)
        self.m_rf_per_tile = self.tiling.tiles[0].geometry.size // config.m_s
        self.combiner = design_combiner(config.t_slots, self.tiling, self.m_rf_per_tile)
        tile = self.tiling.tiles[0].geometry
        self.tile_dictionary = build_angular(
            tile.m_h, tile.m_v, tile.d_h, tile.d_v, config.wavelength, config.z_grid
        )
        self.options = config.stage_options()
        self._lazy = {}

    def full_array_dictionary(self):
        if "dft" not in self._lazy:
            self._lazy["dft"] = build_angular(
                self.bs.m_h, self.bs.m_v, self.bs.d_h, self.bs.d_v,
                self.config.wavelength, self.config.baseline_z_grid,
            )
        return self._lazy["dft"]

    def spherical_dictionary(self):
        if "spherical" not in self._lazy:
            r_min, r_max, count = self.config.spherical_rings
            self._lazy["spherical"] = build_spherical_baseline(
                self.bs, self.config.spherical_angle_grid,
                reciprocal_distance_rings(r_min, r_max, int(count)),
                self.config.wavelength,
            )
        return self._lazy["spherical"]

    def dft_precoder(self):
        if "dft_precoder" not in self._lazy:
            self._lazy["dft_precoder"] = design_precoder_dft(self.config.n_ue)
        return self._lazy["dft_precoder"]


def draw_scene(config: ExperimentConfig, bs: ArrayGeometry, seed: int) -> Scene:
    """Draw user center, orientation-fixed ULA, and scatterer paths."""
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1), (z0, z1) = config.user_box
    center = np.array([
        rng.uniform(x0, x1), rng.uniform(y0, y1), rng.uniform(z0, z1),
    ])
    ue = build_ula(config.n_ue, config.wavelength / 2, center, config.ue_orientation)
    paths = []
    for l in range(config.num_nlos):
        (sx0, sx1), (sy0, sy1), (sz0, sz1) = config.scatter_box
        pos = np.array([
            rng.uniform(sx0, sx1), rng.uniform(sy0, sy1), rng.uniform(sz0, sz1),
        ])
        paths.append(PathParams(position=pos, aod=rng.uniform(-np.pi / 2, np.pi / 2),
                                index=l + 1))
    return Scene(
        bs=bs, ue=ue, wavelength=config.wavelength, paths=tuple(paths),
        power=config.power, noise_var=0.0,
        los_nlos_ratio_db=config.los_nlos_ratio_db,
    )


def noise_var_for_snr(config: ExperimentConfig, h: np.ndarray, snr_db: float) -> float:
    """Invert ``SNR = p ||H||_F^2 / (M N sigma^2)``; inf SNR gives 0."""
    if np.isinf(snr_db):
        return 0.0
    snr = 10.0 ** (snr_db / 10.0)
    m, n = h.shape
    return config.power * float(np.linalg.norm(h, "fro") ** 2) / (m * n * snr)


def run_trial(ctx: SweepContext, method: str, snr_db: float, trial: int) -> TrialRow:
    """Run one (method, SNR, trial) cell; never raises on solver failure."""
    config = ctx.config
    seed = derive_seed(config.base_seed, method, snr_db, trial)
    children = np.random.SeedSequence(seed).spawn(4)
    scene_seed, chan_seed, noise_seed, extra_seed = (
        int(c.generate_state(1)[0]) for c in children
    )
    scene = draw_scene(config, ctx.bs, scene_seed)
    realization = synthesize(scene, chan_seed)
    scene = scene.with_noise_var(noise_var_for_snr(config, realization.h, snr_db))
    timings = {}
    loc_error = float("nan")
    try:
        h_hat, loc_error, timings, _detail = _dispatch_method(
            ctx, method, scene, realization, noise_seed, extra_seed
        )
        value = nmse(h_hat, realization.h)
        status = "ok"
    except NearMimoError as exc:
        value = float("nan")
        status = type(exc).__name__
    return TrialRow(
        method=method, snr_db=snr_db, trial=trial, seed=seed,
        nmse=value, loc_error_m=loc_error,
        t_stage1_ms=1e3 * timings.get("stage1", 0.0),
        t_stage2_ms=1e3 * timings.get("stage2", 0.0),
        t_stage3_ms=1e3 * timings.get("stage3", 0.0),
        status=status,
    )


def _dispatch_method(ctx, method, scene, realization, noise_seed, extra_seed):
    """Run one method; returns (h_hat, loc_error, timings, detail)."""
    config = ctx.config
    options = ctx.options
    target = scene.ue.center
    if method in ("proposed-sbl", "proposed-omp3", "random-combiner"):
        combiner = ctx.combiner
        if method == "random-combiner":
            combiner = random_combiner(
                config.t_slots, ctx.tiling, ctx.m_rf_per_tile, seed=extra_seed
            )
        opts = options if method != "proposed-omp3" else replace(options, stage3_solver="omp")
        out = run_three_stage(
            scene, realization, combiner, ctx.tile_dictionary, noise_seed, opts
        )
        loc_error = float(np.linalg.norm(out.location.point - target))
        detail = {
            "location": {
                "point": out.location.point.tolist(),
                "residual": out.location.residual,
                "condition": out.location.condition,
            },
            "directions": [
                None if d is None else d.tolist() for d in out.directions
            ],
            "stage1_supports": [s.support.tolist() for s in out.stage1],
            "stage3_support_size": int(out.stage3.support.size),
            "stage3_iterations": out.stage3.iterations,
        }
        return out.h_hat, loc_error, out.timings, detail

    if method == "stage1-only":
        record = simulate_reception(
            scene, realization, ctx.combiner, uniform_precoder(config.n_ue), noise_seed
        )
        sols, channels = stage1(record, ctx.tile_dictionary, options)
        h_hat = stage1_only_estimate(channels, ctx.tiling, config.n_ue)
        detail = {"stage1_supports": [s.support.tolist() for s in sols]}
        return h_hat, float("nan"), {}, detail

    if method in ("antenna-wise-dft", "antenna-wise-spherical", "antenna-wise-subarray-dft"):
        if method == "antenna-wise-dft":
            dictionary, per_subarray = ctx.full_array_dictionary(), False
        elif method == "antenna-wise-spherical":
            dictionary, per_subarray = ctx.spherical_dictionary(), False
        else:
            dictionary, per_subarray = ctx.tile_dictionary, True
        h_hat = baseline_antenna_wise(
            scene, realization, ctx.combiner, dictionary, ctx.dft_precoder(),
            noise_seed, l_assumed=config.l_assumed, per_subarray=per_subarray,
        )
        return h_hat, float("nan"), {}, {}

    if method == "eigen-dictionary":
        record = simulate_reception(
            scene, realization, ctx.combiner, uniform_precoder(config.n_ue), noise_seed
        )
        _sols, channels = stage1(record, ctx.tile_dictionary, options)
        estimate, _dirs, _rays = stage2(channels, ctx.tiling, scene.wavelength, options)
        h_hat = baseline_eigen_dictionary(
            record, estimate.point, scene.bs, scene.ue, scene.wavelength,
            rank=config.eigen_rank,
        )
        loc_error = float(np.linalg.norm(estimate.point - target))
        detail = {"location": {"point": estimate.point.tolist()}}
        return h_hat, loc_error, {}, detail

    raise ValueError(f"unknown method {method!r}")


def simulate_once(
    config: ExperimentConfig, method: str, snr_db: float, seed: int,
    include_timings: bool = False,
) -> dict:
    """Run one scene + one method; returns a JSON-able report and matrices."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    ctx = SweepContext(config)
    children = np.random.SeedSequence(seed).spawn(4)
    scene_seed, chan_seed, noise_seed, extra_seed = (
        int(c.generate_state(1)[0]) for c in children
    )
    scene = draw_scene(config, ctx.bs, scene_seed)
    realization = synthesize(scene, chan_seed)
    scene = scene.with_noise_var(noise_var_for_snr(config, realization.h, snr_db))
    h_true = realization.h
    try:
        h_hat, loc_error, timings, detail = _dispatch_method(
            ctx, method, scene, realization, noise_seed, extra_seed
        )
        value = nmse(h_hat, h_true)
        status = "ok"
    except NearMimoError as exc:
        h_hat = np.zeros_like(h_true)
        loc_error, value = float("nan"), float("nan")
        timings, detail = {}, {}
        status = type(exc).__name__
    report = {
        "method": method,
        "seed": seed,
        "snr_db": snr_db if np.isfinite(snr_db) else "inf",
        "status": status,
        "nmse_db": (
            float(10 * np.log10(value)) if np.isfinite(value) and value > 0 else None
        ),
        "loc_error_m": loc_error if np.isfinite(loc_error) else None,
        "true_center": scene.ue.center.tolist(),
        "timings_ms": {
            k: (1e3 * v if include_timings else 0.0) for k, v in timings.items()
        },
        "detail": detail,
        "config": config.to_dict(),
    }
    return {"report": report, "h_hat": h_hat, "h_true": h_true}


def run_sweep(config: ExperimentConfig, progress=None) -> ResultTable:
    """Run the full (method x SNR x trial) grid; deterministic per config."""
    ctx = SweepContext(config)
    cells = [
        (method, snr, trial)
        for method in config.methods
        for snr in config.snr_db
        for trial in range(config.trials)
    ]
    table = ResultTable(config=config)
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_trial_star, [(config, c) for c in cells],
                                 chunksize=8))
        table.rows.extend(rows)
    else:
        for i, cell in enumerate(cells):
            table.rows.append(run_trial(ctx, *cell))
            if progress is not None and (i + 1) % 25 == 0:
                progress(i + 1, len(cells))
    table.rows = table.sorted_rows()
    return table


_CTX_CACHE: dict = {}


def _run_trial_star(args):
    config, cell = args
    key = config.to_json()
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        ctx = SweepContext(config)
        _CTX_CACHE.clear()
        _CTX_CACHE[key] = ctx
    return run_trial(ctx, *cell)
