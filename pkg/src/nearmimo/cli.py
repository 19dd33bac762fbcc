"""Command-line interface.

Subcommands:
  verify       run the module invariant suite (exit 0 iff all pass)
  simulate     one scene + one method; dumps StageOutputs JSON + matrices
  sweep        Monte-Carlo sweep from a config file; emits CSV + JSON
  export-dict  dump a dictionary matrix with a text manifest

Exit codes: 0 success, 1 configuration/usage error, 2 runtime failure.
Output artifacts are byte-reproducible for a fixed (config, seed);
wall-clock timings are zeroed in files unless --timings is passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dictionaries import (
    build_angular,
    build_location,
    build_spherical_baseline,
    reciprocal_distance_rings,
)
from .errors import NearMimoError
from .harness import ExperimentConfig, desk_profile, paper_profile, run_sweep, simulate_once
from .matfile import save_matrix


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        cfg = ExperimentConfig.from_json(path.read_text())
    elif getattr(args, "profile", "desk") == "paper":
        cfg = paper_profile()
    else:
        cfg = desk_profile()
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, base_seed=args.seed)
    return cfg


def _add_common(p, with_method=False):
    p.add_argument("--config", help="path to a JSON experiment config")
    p.add_argument("--profile", choices=("desk", "paper"), default="desk",
                   help="built-in profile when --config is omitted")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings in output files "
                        "(breaks byte-reproducibility)")
    if with_method:
        p.add_argument("--method", default="proposed-sbl",
                       help="method name ('proposed' = proposed-sbl)")
        p.add_argument("--snr-db", type=float, default=10.0,
                       help="SNR in dB ('inf' for noiseless)")


def build_parser() -> _Parser:
    parser = _Parser(prog="nearmimo", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run module invariant suites")
    p.add_argument("--profile", choices=("desk", "paper"), default="desk")

    p = sub.add_parser("simulate", help="run one scene + one method")
    _add_common(p, with_method=True)

    p = sub.add_parser("sweep", help="run the Monte-Carlo sweep")
    _add_common(p)

    p = sub.add_parser("export-dict", help="dump a dictionary matrix")
    p.add_argument("--kind", choices=("angular", "location", "spherical"),
                   default="angular")
    p.add_argument("--center", default=None,
                   help="location-grid center 'x,y,z' (location kind)")
    _add_common(p)
    return parser


def _cmd_verify(args) -> int:
    from .verify import run_verification

    return 0 if run_verification() else 2


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    method = {"proposed": "proposed-sbl"}.get(args.method, args.method)
    if method not in cfg.methods:
        from .harness import METHODS

        if method not in METHODS:
            raise ValueError(f"unknown method {args.method!r}")
    seed = args.seed if args.seed is not None else cfg.base_seed
    result = simulate_once(cfg, method, args.snr_db, seed,
                           include_timings=args.timings)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"simulate_{method}_seed{seed}"
    with open(f"{stem}.json", "w") as fh:
        json.dump(result["report"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_matrix(f"{stem}_h_hat.cmx", result["h_hat"], cfg.wavelength)
    save_matrix(f"{stem}_h_true.cmx", result["h_true"], cfg.wavelength)
    print(f"wrote {stem}.json")
    nmse_db = result["report"]["nmse_db"]
    print(f"{method} @ {args.snr_db} dB: NMSE {nmse_db} dB, "
          f"status {result['report']['status']}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = run_sweep(cfg, progress=lambda i, n: print(f"  {i}/{n} trials", file=sys.stderr))
    table.to_csv(out / "sweep_rows.csv", include_timings=args.timings)
    table.aggregates_to_csv(out / "sweep_aggregate.csv")
    table.to_json(out / "sweep.json", include_timings=args.timings)
    failures = table.failure_summary()
    print(f"wrote {out}/sweep_rows.csv ({len(table.rows)} rows, "
          f"{failures['failed']} failed)")
    if failures["failed"]:
        print(f"failure summary: {failures['by_status']}")
    return 0


def _cmd_export_dict(args) -> int:
    cfg = _load_config(args)
    from .geometry import build_ula, build_upa, partition

    d_h, d_v = cfg.spacings()
    bs = build_upa(cfg.bs_m_h, cfg.bs_m_v, d_h, d_v, (0, 0, 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "angular":
        tile = partition(bs, cfg.tiles_h, cfg.tiles_v).tiles[0].geometry
        d = build_angular(tile.m_h, tile.m_v, tile.d_h, tile.d_v,
                          cfg.wavelength, cfg.z_grid)
        manifest = (
            f"kind angular\nsubarray {tile.m_h}x{tile.m_v}\nz {d.z}\n"
            f"cosine_grid {' '.join(format(c, '.10g') for c in d.cosines)}\n"
        )
    elif args.kind == "spherical":
        r0, r1, count = cfg.spherical_rings
        rings = reciprocal_distance_rings(r0, r1, int(count))
        d = build_spherical_baseline(bs, cfg.spherical_angle_grid, rings, cfg.wavelength)
        manifest = (
            f"kind spherical\narray {cfg.bs_m_h}x{cfg.bs_m_v}\n"
            f"angle_grid {cfg.spherical_angle_grid}\n"
            f"rings {' '.join(format(r, '.10g') for r in rings)}\n"
        )
    else:
        if args.center:
            center = tuple(float(v) for v in args.center.split(","))
        else:
            box = cfg.user_box
            center = tuple((lo + hi) / 2 for lo, hi in box)
        ue = build_ula(cfg.n_ue, cfg.wavelength / 2, center, cfg.ue_orientation)
        dx, dy, dz = cfg.grid_half_widths
        sx, sy, sz = cfg.grid_counts
        d = build_location(center, dx, dy, dz, sx, sy, sz, bs, ue, cfg.wavelength)
        manifest = (
            f"kind location\ncenter {center[0]:.10g} {center[1]:.10g} {center[2]:.10g}\n"
            f"half_widths {dx} {dy} {dz}\ncounts {sx} {sy} {sz}\n"
            f"atoms {d.matrix.shape[1]}\n"
        )
    stem = out / f"dictionary_{args.kind}"
    save_matrix(f"{stem}.cmx", d.matrix, cfg.wavelength)
    Path(f"{stem}.manifest.txt").write_text(manifest)
    print(f"wrote {stem}.cmx ({d.matrix.shape[0]}x{d.matrix.shape[1]})")
    return 0


_COMMANDS = {
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "export-dict": _cmd_export_dict,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"nearmimo: config error: {exc}", file=sys.stderr)
        return 1
    except NearMimoError as exc:
        print(f"nearmimo: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
