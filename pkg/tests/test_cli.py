import json

import pytest

from hardlab.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """A features file plus two reference dynamics files."""
    out = tmp_path_factory.mktemp("pipeline")
    assert run(["synth", "--preset", "four-blob", "--per-class", "60",
                "--seed", 5, "--out-dir", out]) == 0
    for seed, mid in ((5, "m0"), (6, "m1")):
        assert run(["train-ref", "--features", out / "features.hfea",
                    "--epochs", 18, "--decay-epochs", "10,15",
                    "--batch-size", 64, "--seed", seed,
                    "--model-id", mid, "--out-dir", out]) == 0
    assert run(["estimate", "--estimator", "aum",
                "--dynamics", out / "dynamics_m0.hdyn", out / "dynamics_m1.hdyn",
                "--out-dir", out]) == 0
    return out


def test_synth_writes_manifest_and_features(tmp_path):
    assert run(["synth", "--preset", "four-blob", "--per-class", 20,
                "--seed", 1, "--out-dir", tmp_path]) == 0
    assert (tmp_path / "features.hfea").exists()
    manifest = json.loads((tmp_path / "synth_manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["seed"] == 1
    assert manifest["status"] == "ok"
    assert manifest["outputs"] == [str(tmp_path / "features.hfea")]


def test_custom_synth(tmp_path):
    assert run(["synth", "--centers", "0,0;10,0;0,10", "--scales", "1",
                "--per-class", "30", "--seed", 2, "--out-dir", tmp_path]) == 0
    from hardlab.geometry import read_features
    fs = read_features(tmp_path / "features.hfea")
    assert fs.k_classes == 3 and fs.n_samples == 90


def test_estimate_output_shape(pipeline_dir):
    lines = (pipeline_dir / "hardness.csv").read_text().strip().splitlines()
    assert lines[0] == "sample_id,hardness"
    assert len(lines) == 241  # header + 4*60 samples


def test_ratios_alpha_zero_uniform_targets(pipeline_dir, tmp_path):
    base = ["ratios", "--hardness", pipeline_dir / "hardness.csv",
            "--features", pipeline_dir / "features.hfea",
            "--estimator", "aum"]
    assert run(base + ["--alpha", 1, "--out-dir", tmp_path / "a1"]) == 0
    assert run(base + ["--alpha", 0, "--out-dir", tmp_path / "a0"]) == 0
    rows = (tmp_path / "a0" / "ratios.csv").read_text().strip().splitlines()[1:]
    targets = [int(r.split(",")[-1]) for r in rows]
    assert targets == [60, 60, 60, 60]
    rows1 = (tmp_path / "a1" / "ratios.csv").read_text().strip().splitlines()[1:]
    targets1 = [int(r.split(",")[-1]) for r in rows1]
    assert sum(targets1) == 240 and targets1 != targets


def test_resample_prune_denoise_plans(pipeline_dir, tmp_path):
    common = ["--hardness", pipeline_dir / "hardness.csv",
              "--features", pipeline_dir / "features.hfea",
              "--estimator", "aum", "--out-dir", tmp_path]
    assert run(["resample", "--strategy", "smote", "--seed", 3] + common) == 0
    plan = json.loads((tmp_path / "resampling_plan.json").read_text())
    assert set(plan) == {"strategy", "alpha", "seed", "classes",
                         "multiplicities", "synthetic"}
    total = sum(m for _, m in plan["multiplicities"]) + len(plan["synthetic"])
    assert total == 240

    assert run(["prune", "--mode", "dlp", "--rate", 0.3] + common) == 0
    pruning = json.loads((tmp_path / "pruning_plan.json").read_text())
    assert pruning["mode"] == "dlp" and len(pruning["pruned_ids"]) == 72
    hist = (tmp_path / "pruning_histogram.csv").read_text().splitlines()
    assert hist[0] == "class_id,removed,class_size,removed_fraction"
    assert len(hist) == 5

    assert run(["denoise", "--mode", "fraction", "--fraction", 0.05] + common) == 0
    dn = json.loads((tmp_path / "denoise_plan.json").read_text())
    assert len(dn["removed_ids"]) == 12


def test_overlap_directional(pipeline_dir, tmp_path):
    common = ["--hardness", pipeline_dir / "hardness.csv",
              "--features", pipeline_dir / "features.hfea",
              "--estimator", "aum"]
    assert run(["prune", "--mode", "dlp", "--rate", 0.3,
                "--out-dir", tmp_path / "d"] + common) == 0
    assert run(["prune", "--mode", "clp", "--rate", 0.3,
                "--out-dir", tmp_path / "c"] + common) == 0
    assert run(["overlap", "--plan-a", tmp_path / "d" / "pruning_plan.json",
                "--plan-b", tmp_path / "c" / "pruning_plan.json",
                "--out-dir", tmp_path]) == 0
    report = json.loads((tmp_path / "overlap.json").read_text())
    assert 0.0 <= report["shared_over_a"] <= 1.0
    assert 0.0 <= report["shared_over_b"] <= 1.0


def test_stability_csv(pipeline_dir, tmp_path):
    assert run(["stability", "--task", "pruning-indices",
                "--dynamics", pipeline_dir / "dynamics_m0.hdyn",
                pipeline_dir / "dynamics_m1.hdyn",
                "--features", pipeline_dir / "features.hfea",
                "--estimator", "aum", "--rates", "0.1,0.2",
                "--out-dir", tmp_path]) == 0
    lines = (tmp_path / "stability.csv").read_text().strip().splitlines()
    assert lines[0] == "j,metric,class_or_rate,value"
    assert len(lines) == 3  # one transition x two rates


def test_class_accuracy_stability(pipeline_dir, tmp_path):
    assert run(["stability", "--task", "class-accuracy",
                "--metrics", pipeline_dir / "metrics_m0.csv",
                pipeline_dir / "metrics_m1.csv",
                "--out-dir", tmp_path]) == 0
    lines = (tmp_path / "stability.csv").read_text().strip().splitlines()
    assert len(lines) == 9  # header + 2 ensemble sizes x 4 classes


def test_metrics_and_families(pipeline_dir, tmp_path):
    assert run(["metrics", "--features", pipeline_dir / "features.hfea",
                "--k", 20, "--out-dir", tmp_path]) == 0
    lines = (tmp_path / "metric_values.csv").read_text().strip().splitlines()
    assert lines[0] == "sample_id,metric,value"
    assert (tmp_path / "family_CP.json").exists()
    assert (tmp_path / "family_MDSC.json").exists()


def test_correlate(pipeline_dir, tmp_path):
    assert run(["correlate", "--hardness", pipeline_dir / "hardness.csv",
                "--features", pipeline_dir / "features.hfea",
                "--estimator", "aum",
                "--accuracy", pipeline_dir / "metrics_m0.csv",
                "--out-dir", tmp_path]) == 0
    result = json.loads((tmp_path / "correlation.json").read_text())
    assert -1.0 <= result["rho"] <= 1.0
    assert 0.0 <= result["p"] <= 1.0


def test_report_full_pipeline_deterministic(pipeline_dir, tmp_path):
    args = ["report", "--features", pipeline_dir / "features.hfea",
            "--dynamics", pipeline_dir / "dynamics_m0.hdyn",
            pipeline_dir / "dynamics_m1.hdyn",
            "--estimator", "aum", "--strategy", "smote",
            "--rate", 0.4, "--fraction", 0.05, "--seed", 11]
    assert run(args + ["--out-dir", tmp_path / "r1"]) == 0
    assert run(args + ["--out-dir", tmp_path / "r2"]) == 0
    for name in ("hardness.csv", "resampling_plan.json", "dlp_plan.json",
                 "clp_plan.json", "denoise_plan.json", "report.json"):
        a = (tmp_path / "r1" / name).read_bytes()
        b = (tmp_path / "r2" / name).read_bytes()
        assert a == b, name


def test_module_error_exits_one_and_writes_manifest(tmp_path):
    code = run(["estimate", "--estimator", "aum",
                "--dynamics", tmp_path / "missing.hdyn",
                "--out-dir", tmp_path])
    assert code == 1
    manifest = json.loads((tmp_path / "estimate_manifest.json").read_text())
    assert manifest["status"] == "error"


def test_unknown_flag_exits_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(["synth", "--bogus-flag", "--out-dir", tmp_path])
    assert exc.value.code == 2


def test_hlab_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("HLAB_THREADS", "3")
    assert run(["synth", "--preset", "four-blob", "--per-class", 20,
                "--seed", 1, "--out-dir", tmp_path]) == 0
    manifest = json.loads((tmp_path / "synth_manifest.json").read_text())
    assert manifest["parameters"]["threads"] == 3


def test_module_error_on_bad_rate(pipeline_dir, tmp_path):
    code = run(["prune", "--hardness", pipeline_dir / "hardness.csv",
                "--features", pipeline_dir / "features.hfea",
                "--estimator", "aum", "--mode", "dlp", "--rate", 1.5,
                "--out-dir", tmp_path])
    assert code == 1
