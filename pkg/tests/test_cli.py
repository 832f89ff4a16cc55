import json

import numpy as np
import pytest

from chaoslab.cli import main
from chaoslab.tensors import SymTensor


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_expand_counterexample_fixture(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"fixture": "counterexample"})
    out = tmp_path / "out"
    assert main(["expand", "--config", cfg, "--out-dir", str(out)]) == 0
    report = read_json(out / "expand_report.json")
    assert abs(report["rho"]) < 1e-12
    assert report["fourth_moment_covariance"] == pytest.approx(4.0, rel=1e-10)
    assert (out / "resolved_config.json").exists()


def test_expand_tensor_file(tmp_path):
    rng = np.random.default_rng(0)
    tensors = [SymTensor(rng.standard_normal(3)).to_dict() for _ in range(2)]
    tensor_file = tmp_path / "tensors.json"
    tensor_file.write_text(json.dumps(tensors))
    cfg = write_config(tmp_path, "cfg.json", {"tensors": str(tensor_file), "seed": 4})
    out = tmp_path / "out"
    assert main(["expand", "--config", cfg, "--out-dir", str(out)]) == 0
    report = read_json(out / "expand_report.json")
    assert report["relative_gap"] <= 1e-9
    assert report["pointwise_max_error"] <= 1e-9
    expansion = read_json(out / "expansion.json")
    assert sorted(int(k) for k in expansion["terms"]) == [0, 2]


def test_expand_first_order_fixture(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"fixture": "first-order-product"})
    out = tmp_path / "out"
    assert main(["expand", "--config", cfg, "--out-dir", str(out)]) == 0
    expansion = read_json(out / "expansion.json")
    assert sorted(int(k) for k in expansion["terms"]) == [0, 2]


def test_verify_passes_for_fbm(tmp_path):
    cfg = write_config(
        tmp_path,
        "cfg.json",
        {
            "kernel": {"type": "fbm", "alpha": 0.75},
            "grid": {"steps": 256, "left_units": 30},
            "upper_levels": [1, 2, 3, 4, 5, 6],
            "coupling_levels": [2, 3, 4, 5],
        },
    )
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out-dir", str(out)]) == 0
    report = read_json(out / "verify_report.json")
    assert report["passed"]
    assert report["coupling"]["epsilon"] > 0
    assert report["truncation"]["relative_tail"] >= 0


def test_verify_zero_kernel_fails(tmp_path):
    cfg = write_config(
        tmp_path,
        "cfg.json",
        {
            "kernel": {"type": "zero", "order": 1},
            "grid": {"steps": 128, "left_units": 8},
            "skip_refinement": True,
            "truncation_probe": False,
        },
    )
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out-dir", str(out)]) == 1
    report = read_json(out / "verify_report.json")
    assert not report["lower_scaling"]["passed"]


def test_simulate_reproducible_and_report(tmp_path):
    sim_cfg = {
        "kernel": {"type": "hermite", "order": 2, "alpha": 0.7},
        "grid": {"steps": 256, "left_units": 10},
        "paths": 4,
        "seed": 9,
    }
    cfg = write_config(tmp_path, "sim.json", sim_cfg)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out-dir", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out-dir", str(out2)]) == 0
    first = (out1 / "path-0000.csv").read_bytes()
    assert first == (out2 / "path-0000.csv").read_bytes()
    assert (out1 / "run.json").read_bytes() == (out2 / "run.json").read_bytes()
    run = read_json(out1 / "run.json")
    assert run["seed"] == 9 and run["generator"] == "philox"

    rep_cfg = write_config(
        tmp_path,
        "rep.json",
        {
            "paths_dir": str(out1),
            "slope": {"p": 2, "levels": [2, 3, 4, 5]},
            "besov": {"smoothness": 0.7, "orlicz_beta": 1.0},
            "moment_growth": {"alpha": 0.7, "exponents": [1.0, 0.5], "levels": [3, 4, 5]},
            "modulus": {"alpha": 0.7, "log_exponent": 1.0, "subsample_factors": [1, 2]},
        },
    )
    rep_out = tmp_path / "rep"
    code = main(["report", "--config", rep_cfg, "--out-dir", str(rep_out)])
    summary = read_json(rep_out / "report_summary.json")
    assert summary["paths"] == 4
    assert (rep_out / "slopes.csv").exists()
    assert (rep_out / "besov_levels.csv").exists()
    assert (rep_out / "moment_quantiles.csv").exists()
    assert (rep_out / "modulus.csv").exists()
    assert code == 0 if summary["passed"] else 1


def test_report_with_inline_simulation_and_tolerance(tmp_path):
    cfg = write_config(
        tmp_path,
        "rep.json",
        {
            "simulate": {
                "kernel": {"type": "fbm", "alpha": 0.75},
                "grid": {"steps": 1024, "left_units": 30},
                "paths": 8,
                "seed": 21,
            },
            "slope": {
                "p": 2,
                "levels": [3, 4, 5, 6, 7],
                "expected_alpha": 0.75,
                "tolerance": 0.08,
            },
        },
    )
    out = tmp_path / "out"
    assert main(["report", "--config", cfg, "--out-dir", str(out)]) == 0
    summary = read_json(out / "report_summary.json")
    assert summary["checks"]["slope"]["passed"]


def test_fuzz_command(tmp_path):
    cfg = write_config(
        tmp_path,
        "fuzz.json",
        {
            "seed": 5,
            "equivalence_instances": 10,
            "inequality_instances": 10,
            "max_total": 8,
            "tolerance": 1e-9,
        },
    )
    out = tmp_path / "out"
    assert main(["fuzz", "--config", cfg, "--out-dir", str(out)]) == 0
    summary = read_json(out / "fuzz_summary.json")
    assert summary["passed"]
    assert (out / "fuzz_equivalence.csv").exists()
    assert (out / "fuzz_inequalities.csv").exists()


def test_config_schema_violation_exits_2(tmp_path):
    cfg = write_config(tmp_path, "bad.json", {"kernel": {"type": "fbm"}, "grid": {"steps": -1}})
    assert main(["verify", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 2


def test_missing_config_exits_2(tmp_path):
    assert main(["expand", "--config", str(tmp_path / "none.json")]) == 2


def test_seed_and_set_overrides(tmp_path):
    sim_cfg = {
        "kernel": {"type": "fbm", "alpha": 0.6},
        "grid": {"steps": 64, "left_units": 4},
        "paths": 1,
        "seed": 1,
    }
    cfg = write_config(tmp_path, "sim.json", sim_cfg)
    out1 = tmp_path / "o1"
    assert main(["simulate", "--config", cfg, "--out-dir", str(out1), "--seed", "7"]) == 0
    assert read_json(out1 / "run.json")["seed"] == 7
    out2 = tmp_path / "o2"
    assert (
        main(
            [
                "simulate",
                "--config", cfg,
                "--out-dir", str(out2),
                "--set", "kernel.alpha=0.7",
                "--set", "paths=2",
            ]
        )
        == 0
    )
    run = read_json(out2 / "run.json")
    assert run["kernel"]["alpha"] == 0.7
    assert run["paths"] == 2


def test_csv_format_is_plain(tmp_path):
    cfg = write_config(
        tmp_path,
        "sim.json",
        {
            "kernel": {"type": "fbm", "alpha": 0.6},
            "grid": {"steps": 32, "left_units": 4},
            "paths": 1,
            "seed": 0,
        },
    )
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out-dir", str(out)]) == 0
    raw = (out / "path-0000.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().strip().split("\n")
    assert lines[0] == "t,value"
    assert len(lines) == 34  # header + 33 grid points
    float(lines[5].split(",")[1])  # parses with '.' decimal
