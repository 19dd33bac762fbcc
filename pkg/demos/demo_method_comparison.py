"""Compare all estimation methods at one SNR on the quick profile.

Runs a handful of Monte-Carlo trials per method and prints a small
table of mean NMSE and localization RMSE.  For publication-grade
curves use `nearmimo sweep` with more trials.
"""

import numpy as np

from nearmimo.harness import SweepContext, desk_profile, run_trial

TRIALS = 8
SNR_DB = 10.0

cfg = desk_profile(trials=TRIALS)
ctx = SweepContext(cfg)

print(f"profile: {cfg.bs_m_h}x{cfg.bs_m_v} array, {cfg.tiles_h}x{cfg.tiles_v} tiles, "
      f"N = {cfg.n_ue}, SNR = {SNR_DB} dB, {TRIALS} trials\n")
print(f"{'method':28s} {'NMSE [dB]':>10s} {'RMSE [m]':>9s} {'ok':>5s}")
for method in cfg.methods:
    rows = [run_trial(ctx, method, SNR_DB, t) for t in range(TRIALS)]
    ok = [r for r in rows if r.status == "ok"]
    mean_nmse = np.mean([r.nmse for r in ok]) if ok else float("nan")
    locs = [r.loc_error_m for r in ok if np.isfinite(r.loc_error_m)]
    rmse = np.sqrt(np.mean(np.square(locs))) if locs else float("nan")
    print(f"{method:28s} {10 * np.log10(mean_nmse):10.2f} {rmse:9.3f} "
          f"{len(ok)}/{TRIALS}")
