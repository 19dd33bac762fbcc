import json

import numpy as np
import pytest

from nearmimo.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultTable,
    SweepContext,
    TrialRow,
    derive_seed,
    desk_profile,
    nmse,
    noise_var_for_snr,
    paper_profile,
    rmse,
    run_sweep,
    run_trial,
    simulate_once,
)


def tiny_config(**overrides):
    base = dict(
        user_box=((1.5, 3.5), (-1.5, 1.5), (-1.0, -1.0)),
        scatter_box=((0.8, 3.0), (-2.0, 2.0), (-2.0, 0.0)),
        methods=("proposed-omp3", "stage1-only"),
        snr_db=(10.0,),
        trials=2,
        sbl_max_iters=20,
        sbl_tol=1e-4,
    )
    base.update(overrides)
    return desk_profile(**base)


class TestMetrics:
    def test_nmse_exact_estimate(self):
        h = np.ones((3, 2), dtype=complex)
        assert nmse(h, h) == 0.0

    def test_nmse_zero_estimate(self):
        h = np.ones((3, 2), dtype=complex)
        assert nmse(np.zeros_like(h), h) == 1.0

    def test_nmse_double_estimate(self):
        h = (np.arange(6).reshape(3, 2) + 1.0).astype(complex)
        assert nmse(2 * h, h) == pytest.approx(1.0, rel=1e-12)

    def test_nmse_rejects_zero_reference(self):
        with pytest.raises(ValueError):
            nmse(np.ones((2, 2)), np.zeros((2, 2)))

    def test_rmse_exact(self):
        pts = [[1.0, 2.0, 3.0]]
        assert rmse(pts, pts) == 0.0

    def test_rmse_three_four_five(self):
        assert rmse([[0.03, 0.04, 0.0]], [[0.0, 0.0, 0.0]]) == pytest.approx(0.05)

    def test_rmse_two_pairs(self):
        hat = [[0.1, 0, 0], [0.2, 0, 0]]
        ref = [[0, 0, 0], [0, 0, 0]]
        assert rmse(hat, ref) == pytest.approx(np.sqrt(0.025), rel=1e-12)

    def test_rmse_rejects_empty(self):
        with pytest.raises(ValueError):
            rmse([], [])


class TestConfig:
    def test_json_roundtrip_identity(self):
        cfg = desk_profile()
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg
        assert ExperimentConfig.from_json(again.to_json()) == again

    def test_paper_profile_roundtrip(self):
        cfg = paper_profile()
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg
        assert cfg.m_rf_effective == 128

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            desk_profile(methods=("warp-drive",))

    def test_rejects_bad_ms(self):
        with pytest.raises(ValueError):
            desk_profile(m_s=7)

    def test_warns_on_inconsistent_rf_count(self):
        with pytest.warns(UserWarning, match="inconsistent RF chain count"):
            desk_profile(m_rf=256)

    def test_rejects_unknown_keys(self):
        data = desk_profile().to_dict()
        data["flux_capacitor"] = 1
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(data)

    def test_aperture_spacing_mode(self):
        cfg = paper_profile(spacing="aperture")
        d_h, d_v = cfg.spacings()
        assert d_h == pytest.approx(0.5 / 15)
        assert d_v == pytest.approx(1.5 / 47)

    def test_noise_var_from_snr(self):
        cfg = desk_profile()
        h = np.full((4, 2), 1.0 + 0j)
        sigma2 = noise_var_for_snr(cfg, h, 0.0)
        assert sigma2 == pytest.approx(cfg.power * 8 / 8)
        assert noise_var_for_snr(cfg, h, np.inf) == 0.0


class TestSeeds:
    def test_derive_seed_stable(self):
        a = derive_seed(123, "proposed-sbl", 10.0, 7)
        b = derive_seed(123, "proposed-sbl", 10.0, 7)
        assert a == b

    def test_derive_seed_distinguishes_cells(self):
        seeds = {
            derive_seed(123, m, s, t)
            for m in ("proposed-sbl", "stage1-only")
            for s in (0.0, 10.0)
            for t in range(5)
        }
        assert len(seeds) == 20


class TestResultTable:
    def _table(self):
        cfg = tiny_config()
        rows = [
            TrialRow("proposed-omp3", 10.0, 0, 1, 0.01, 0.5, 1.0, 2.0, 3.0),
            TrialRow("proposed-omp3", 10.0, 1, 2, 0.03, 1.5, 1.0, 2.0, 3.0),
            TrialRow("stage1-only", 10.0, 0, 3, 0.5, float("nan"), 0.0, 0.0, 0.0),
            TrialRow("stage1-only", 10.0, 1, 4, float("nan"), float("nan"),
                     0.0, 0.0, 0.0, status="StageFailure"),
        ]
        return ResultTable(config=cfg, rows=rows)

    def test_aggregates_recompute_from_rows(self):
        table = self._table()
        agg = {(a["method"], a["snr_db"]): a for a in table.aggregates()}
        cell = agg[("proposed-omp3", 10.0)]
        assert cell["nmse_mean"] == pytest.approx(0.02, abs=1e-15)
        assert cell["nmse_mean_db"] == pytest.approx(10 * np.log10(0.02), abs=1e-12)
        assert cell["rmse_m"] == pytest.approx(np.sqrt((0.25 + 2.25) / 2), abs=1e-12)
        failed = agg[("stage1-only", 10.0)]
        assert failed["n_ok"] == 1
        assert failed["nmse_mean"] == pytest.approx(0.5)

    def test_failure_summary(self):
        summary = self._table().failure_summary()
        assert summary["failed"] == 1
        assert summary["by_status"] == {"StageFailure": 1}

    def test_csv_columns_and_timings_zeroed(self, tmp_path):
        table = self._table()
        path = tmp_path / "rows.csv"
        table.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 5
        first = lines[1].split(",")
        assert first[0] == "proposed-omp3"
        assert first[6] == "0" and first[7] == "0" and first[8] == "0"
        table.to_csv(path, include_timings=True)
        first = path.read_text().strip().split("\n")[1].split(",")
        assert first[6] == "1"

    def test_json_output(self, tmp_path):
        table = self._table()
        path = tmp_path / "out.json"
        table.to_json(path)
        payload = json.loads(path.read_text())
        assert payload["config"]["trials"] == 2
        assert len(payload["rows"]) == 4
        assert payload["failures"]["failed"] == 1


class TestSweep:
    def test_sweep_deterministic(self, tmp_path):
        cfg = tiny_config()
        a = run_sweep(cfg)
        b = run_sweep(cfg)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.to_csv(pa)
        b.to_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_sweep_rows_complete(self):
        cfg = tiny_config()
        table = run_sweep(cfg)
        assert len(table.rows) == len(cfg.methods) * len(cfg.snr_db) * cfg.trials
        keys = {(r.method, r.snr_db, r.trial) for r in table.rows}
        assert len(keys) == len(table.rows)

    def test_trial_reuses_cell_seed(self):
        cfg = tiny_config()
        ctx = SweepContext(cfg)
        row = run_trial(ctx, "proposed-omp3", 10.0, 0)
        assert row.seed == derive_seed(cfg.base_seed, "proposed-omp3", 10.0, 0)

    def test_simulate_once_report(self):
        cfg = tiny_config()
        result = simulate_once(cfg, "proposed-omp3", 10.0, seed=99)
        report = result["report"]
        assert report["status"] == "ok"
        assert report["method"] == "proposed-omp3"
        assert result["h_hat"].shape == result["h_true"].shape
        assert report["nmse_db"] is not None
        json.dumps(report)  # must be JSON-serializable

    def test_simulate_once_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            simulate_once(tiny_config(), "nope", 10.0, seed=1)

    def test_parallel_matches_serial(self, tmp_path):
        serial = run_sweep(tiny_config(trials=2))
        parallel = run_sweep(tiny_config(trials=2, workers=2))
        ps, pp = tmp_path / "s.csv", tmp_path / "p.csv"
        serial.to_csv(ps)
        parallel.to_csv(pp)
        assert ps.read_bytes() == pp.read_bytes()
