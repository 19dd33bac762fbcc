import json
from pathlib import Path

import pytest

from nearmimo.cli import main
from nearmimo.harness import desk_profile
from nearmimo.matfile import load_matrix


@pytest.fixture()
def tiny_config_file(tmp_path):
    cfg = desk_profile(
        user_box=((1.5, 3.5), (-1.5, 1.5), (-1.0, -1.0)),
        scatter_box=((0.8, 3.0), (-2.0, 2.0), (-2.0, 0.0)),
        methods=("proposed-omp3", "stage1-only"),
        snr_db=(10.0,),
        trials=2,
        sbl_max_iters=20,
        sbl_tol=1e-4,
    )
    path = tmp_path / "config.json"
    path.write_text(cfg.to_json())
    return path


def test_unknown_flag_exits_one(capsys):
    assert main(["sweep", "--bogus-flag"]) == 1


def test_unknown_command_exits_one(capsys):
    assert main(["transmogrify"]) == 1


def test_missing_config_exits_one(tmp_path, capsys):
    code = main(["sweep", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)])
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_malformed_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_simulate_byte_identical(tmp_path, tiny_config_file, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code = main([
            "simulate", "--config", str(tiny_config_file),
            "--method", "proposed-omp3", "--seed", "7",
            "--snr-db", "10", "--out", str(out),
        ])
        assert code == 0
    names = sorted(p.name for p in out_a.iterdir())
    assert names == sorted(p.name for p in out_b.iterdir())
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_simulate_accepts_proposed_alias(tmp_path, tiny_config_file):
    code = main([
        "simulate", "--config", str(tiny_config_file),
        "--method", "proposed", "--seed", "3", "--snr-db", "12",
        "--out", str(tmp_path / "alias"),
    ])
    assert code == 0
    report = json.loads((tmp_path / "alias" / "simulate_proposed-sbl_seed3.json").read_text())
    assert report["method"] == "proposed-sbl"
    h_hat, wl = load_matrix(tmp_path / "alias" / "simulate_proposed-sbl_seed3_h_hat.cmx")
    assert h_hat.shape == (12 * 24, 2)


def test_simulate_unknown_method_exits_one(tmp_path, tiny_config_file):
    code = main([
        "simulate", "--config", str(tiny_config_file),
        "--method", "nope", "--out", str(tmp_path),
    ])
    assert code == 1


def test_sweep_outputs_byte_identical(tmp_path, tiny_config_file):
    out_a = tmp_path / "sa"
    out_b = tmp_path / "sb"
    for out in (out_a, out_b):
        code = main(["sweep", "--config", str(tiny_config_file), "--out", str(out)])
        assert code == 0
    for name in ("sweep_rows.csv", "sweep_aggregate.csv", "sweep.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_sweep_csv_has_documented_columns(tmp_path, tiny_config_file):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(tiny_config_file), "--out", str(out)]) == 0
    header = (out / "sweep_rows.csv").read_text().split("\n", 1)[0]
    assert header == ("method,snr_db,trial,seed,nmse_db,rmse_m,"
                      "t_stage1_ms,t_stage2_ms,t_stage3_ms,status")


def test_export_dict_angular(tmp_path, tiny_config_file):
    out = tmp_path / "d"
    code = main(["export-dict", "--kind", "angular",
                 "--config", str(tiny_config_file), "--out", str(out)])
    assert code == 0
    matrix, wl = load_matrix(out / "dictionary_angular.cmx")
    assert matrix.shape == (6 * 12, 32 * 32)
    manifest = (out / "dictionary_angular.manifest.txt").read_text()
    assert "kind angular" in manifest


def test_export_dict_location(tmp_path, tiny_config_file):
    out = tmp_path / "d"
    code = main(["export-dict", "--kind", "location", "--center", "2.5,0.5,-1.0",
                 "--config", str(tiny_config_file), "--out", str(out)])
    assert code == 0
    matrix, _ = load_matrix(out / "dictionary_location.cmx")
    assert matrix.shape == (12 * 24 * 2, 5 * 5 * 3)


def test_verify_exits_zero():
    assert main(["verify"]) == 0
