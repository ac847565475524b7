import csv
import json

import pytest

from sonartopo import cli
from sonartopo.core import DomainError
from sonartopo.pipeline import (
    NUMERIC_ARTIFACTS,
    ConfigError,
    RunConfig,
    StageError,
    clean_signal,
    embed,
    noise_sweep,
    run_pipeline,
)

SMALL = dict(n_angles=72, n_wavenumbers=10, reducer="l2", offsets=(0, 5, 25))


@pytest.fixture(scope="module")
def small_runs(tmp_path_factory):
    cfg = RunConfig(**SMALL, sigma=0.002, seed=5)
    a = tmp_path_factory.mktemp("a")
    b = tmp_path_factory.mktemp("b")
    return cfg, run_pipeline(cfg, a), run_pipeline(cfg, b), a, b


def test_pipeline_artifacts_are_deterministic(small_runs):
    _, ra, rb, a, b = small_runs
    assert ra["manifest"]["artifacts"] == rb["manifest"]["artifacts"]
    for name in NUMERIC_ARTIFACTS:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_contents(small_runs):
    cfg, _, _, a, _ = small_runs
    m = json.loads((a / "manifest.json").read_text())
    assert m["config_sha256"] == cfg.digest()
    assert m["seed"] == 5
    assert {"numpy", "scipy", "numba", "python"} <= set(m["versions"])
    assert RunConfig.from_dict(m["config"]) == cfg
    for name in ("signal.csv", "cloud.csv", "cloud_pca.csv", "diagram.csv", "echo_report.json", "diagram.svg", "pca.svg"):
        assert (a / name).exists()
    assert (a / "diagram.svg").read_text().startswith("<svg")


def test_seed_changes_result(small_runs, tmp_path):
    cfg, ra, _, _, _ = small_runs
    rc = run_pipeline(cfg.replace(seed=6), tmp_path)
    assert rc["manifest"]["artifacts"]["signal.csv"] != ra["manifest"]["artifacts"]["signal.csv"]


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        RunConfig(input=str(tmp_path / "missing.csv"))
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_dict({"sigmaa": 0.1})
    with pytest.raises(ConfigError):
        RunConfig(threshold_fraction=1.5)
    with pytest.raises(ConfigError):
        RunConfig(offsets=(0, 400))


def test_config_file_roundtrip(tmp_path):
    cfg = RunConfig(**SMALL, pipe={"length": 0.4, "center": [0, 0.5, 0]})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert RunConfig.from_file(p) == cfg
    assert RunConfig.from_file(p).digest() == cfg.digest()


def test_stage_error_names_stage():
    cfg = RunConfig(**SMALL)
    with pytest.raises(StageError, match="embed") as info:
        embed(clean_signal(cfg), cfg.replace(offsets=(0.0, 2.5)))
    assert isinstance(info.value.cause, DomainError)


def test_noise_sweep_csv(tmp_path):
    cfg = RunConfig(**SMALL, noise_sigmas=(0.0, 0.005))
    rows = noise_sweep(cfg, tmp_path)
    assert [r[0] for r in rows] == [0.0, 0.005]
    with open(tmp_path / "noise_sweep.csv") as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["sigma", "top_loop_death", "top_loop_persistence"]
    assert len(data) == 3


def _config_file(tmp_path, **extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**SMALL, "output_dir": str(tmp_path / "out"), **extra}))
    return str(p)


def test_cli_chain(tmp_path, capsys):
    cfg = _config_file(tmp_path)
    sig = str(tmp_path / "sig.csv")
    assert cli.main(["simulate", "--config", cfg, "--out", sig]) == 0
    assert cli.main(["ingest", sig, "--out", str(tmp_path / "sig.bin")]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["rows"] == 72
    cloud = str(tmp_path / "cloud.csv")
    assert cli.main(["embed", str(tmp_path / "sig.bin"), "--reducer", "l2", "--offsets", "0,5,25", "--out", cloud]) == 0
    diag = str(tmp_path / "diag.csv")
    assert cli.main(["persist", cloud, "--out", diag]) == 0
    rep = str(tmp_path / "rep.json")
    assert cli.main(["analyze", sig, "--diagram", diag, "--out", rep]) == 0
    assert "echos" in json.loads(open(rep).read())


def test_cli_pipeline_and_sweep(tmp_path):
    cfg = _config_file(tmp_path)
    assert cli.main(["pipeline", "--config", cfg]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()
    assert cli.main(["sweep-noise", "--config", cfg, "--sigmas", "0,0.004"]) == 0
    assert (tmp_path / "out" / "noise_sweep.csv").exists()


def test_cli_invalid_input_exit_2(tmp_path, capsys):
    assert cli.main(["ingest", str(tmp_path / "missing.csv")]) == 2
    assert "not found" in capsys.readouterr().err
    assert cli.main(["pipeline", "--config", str(tmp_path / "nope.json")]) == 2
    assert cli.main(["bogus"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a\n1\nnan\n")
    assert cli.main(["ingest", str(bad)]) == 2


def test_cli_compute_failure_exit_3(tmp_path, monkeypatch):
    p = tmp_path / "c.csv"
    p.write_text("x0,x1\n0,0\n1,0\n0,1\n")

    def boom(*a, **k):
        raise MemoryError("out of memory")

    monkeypatch.setattr(cli, "rips_persistence", boom)
    assert cli.main(["persist", str(p), "--out", str(tmp_path / "d.csv")]) == 3
