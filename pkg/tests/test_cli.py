import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from rotwave import cli, snapshot, verify
from rotwave.verify import Check

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SMALL_RUN = ["--set", "n=16", "--set", "dt=0.5", "--set", "t_end=2", "--set", "stride=1"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_rows(path):
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    return list(csv.reader(lines))


def assert_lf_only(directory):
    for path in Path(directory).rglob("*"):
        if path.suffix in (".csv", ".resolved"):
            assert b"\r" not in path.read_bytes(), path


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == 2


def test_bad_set_flag(tmp_path):
    assert run("simulate", "--out", tmp_path, "--set", "bogus=1") == 2
    assert run("simulate", "--out", tmp_path, "--set", "n16") == 2
    assert run("simulate", "--out", tmp_path, "--config", tmp_path / "missing.conf") == 2


def test_verify_empty_or_unknown_suite(tmp_path):
    assert run("verify", "--out", tmp_path) == 2
    assert run("verify", "--out", tmp_path, "--suite", "") == 2
    assert run("verify", "--out", tmp_path, "--suite", "nonsense") == 2


def test_verify_all_passes(tmp_path, capsys):
    assert run("verify", "--config", CONFIGS / "verify.conf", "--out", tmp_path) == 0
    for name in verify.SUITES:
        rows = read_rows(tmp_path / f"verify-{name}.csv")
        assert rows[0] == verify.CHECK_HEADER
        assert all(r[-1] == "pass" for r in rows[1:])
    assert read_rows(tmp_path / "failures.csv") == [verify.CHECK_HEADER]
    assert (tmp_path / "verify-phase-identities-derivatives.csv").exists()
    assert (tmp_path / "config.resolved").exists()
    assert_lf_only(tmp_path)


def test_verify_failure_lists_rows(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(verify, "run_suite", lambda name, rng, samples, reports: [Check(name, "broken", 1.0, 0.5)])
    assert run("verify", "--suite", "bands", "--out", tmp_path) == 1
    out = capsys.readouterr().out
    assert "bands,broken,1.0,<,0.5,FAIL" in out
    assert read_rows(tmp_path / "failures.csv")[1][1] == "broken"


def test_verify_phase_suite_writes_derivative_reports(tmp_path):
    assert run("verify", "--suite", "phase-identities", "--set", "samples=100", "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "verify-phase-identities-derivatives.csv")
    assert rows[0][:4] == ["identity", "samples", "max_relerr", "step"]
    assert len(rows) > 10


def test_decay_empty_times(tmp_path):
    assert run("decay", "--out", tmp_path, "--set", "times=") == 2


def test_decay_resolution_failure(tmp_path, capsys):
    code = run("decay", "--out", tmp_path, "--set", "n_rho=8", "--set", "n_lam=8", "--set", "times=50")
    assert code == 1
    assert "n_rho" in capsys.readouterr().err


def test_decay_radial_gaussian_envelope(tmp_path):
    times = [0.5, 1, 5, 20, 50]
    code = run(
        "decay", "--out", tmp_path, "--set", "profile=radial_gaussian", "--set", "x_set=origin",
        "--set", "n_rho=256", "--set", "n_lam=512", "--set", "times=" + ",".join(map(str, times)),
    )
    assert code == 0
    rows = read_rows(tmp_path / "decay.csv")
    assert rows[0] == ["t", "sup", "empirical_constant"]
    f0 = math.pi**1.5 / (2 * math.pi) ** 3
    for (t, sup, _), expected_t in zip(rows[1:], times):
        assert float(t) == expected_t
        assert abs(float(sup) - abs(math.sin(expected_t) / expected_t) * f0) / f0 < 1e-6
    footer = [l for l in (tmp_path / "decay.csv").read_text().splitlines() if l.startswith("#")]
    assert footer[0].startswith("# slope=") and footer[1].startswith("# d_norm=")


def test_simulate_zero_amplitude(tmp_path):
    assert run("simulate", "--out", tmp_path, "--set", "eps=0", *SMALL_RUN) == 0
    rows = read_rows(tmp_path / "diagnostics.csv")
    assert tuple(rows[0]) == cli.DiagnosticsRow.FIELDS
    assert len(rows) == 6  # header, t = 0, 4 steps
    for row in rows[1:]:
        assert all(float(v) == 0 for v in row[1:])
    assert_lf_only(tmp_path)


def test_simulate_is_deterministic(tmp_path):
    args = ("simulate", "--out", tmp_path, "--seed", 3, "--set", "snapshot_stride=2", *SMALL_RUN)
    assert run(*args) == 0
    first = {p.relative_to(tmp_path): p.read_bytes() for p in tmp_path.rglob("*") if p.is_file()}
    assert run(*args) == 0
    second = {p.relative_to(tmp_path): p.read_bytes() for p in tmp_path.rglob("*") if p.is_file()}
    assert first == second
    assert Path("snapshots/step_0000002.rweu") in first and Path("final.rweu") in first


def test_config_echo_reloads(tmp_path):
    assert run("simulate", "--out", tmp_path, "--seed", 7, *SMALL_RUN) == 0
    from rotwave import config

    echoed = config.load(tmp_path / "config.resolved")
    assert echoed.seed == 7 and echoed.n == 16 and echoed.out == str(tmp_path.resolve())


def test_simulate_unhealthy_run(tmp_path):
    code = run("simulate", "--out", tmp_path, "--set", "n=16", "--set", "eps=1e6", "--set", "dt=10", "--set", "t_end=400")
    assert code == 1
    text = (tmp_path / "diagnostics.csv").read_text()
    assert "# unhealthy" in text
    assert not (tmp_path / "final.rweu").exists()


def test_formulation_presets_agree(tmp_path):
    conf = CONFIGS / "compare.conf"
    assert run("simulate", "--config", conf, "--out", tmp_path / "v") == 0
    assert run("simulate", "--config", conf, "--out", tmp_path / "d", "--set", "formulation=dispersive") == 0
    a = np.stack(list(snapshot.read(tmp_path / "v" / "final.rweu").fields.values()))
    b = np.stack(list(snapshot.read(tmp_path / "d" / "final.rweu").fields.values()))
    assert np.linalg.norm((a - b).ravel()) / np.linalg.norm(a.ravel()) < 1e-6


def test_norms(tmp_path, capsys):
    assert run("simulate", "--out", tmp_path / "sim", *SMALL_RUN) == 0
    capsys.readouterr()
    assert run("norms", tmp_path / "sim" / "final.rweu", "--out", tmp_path / "norms") == 0
    captured = capsys.readouterr()
    rows = read_rows(tmp_path / "norms" / "norms.csv")
    assert rows[0] == cli.NORMS_HEADER
    assert [r[0] for r in rows[1:]] == ["u1", "u2", "u3"]
    assert all(float(r[1]) > 0 and float(r[5]) > 0 for r in rows[1:])
    assert captured.out.splitlines()[0] == ",".join(cli.NORMS_HEADER)
    assert "D norm" in captured.err


def test_norms_usage_errors(tmp_path):
    assert run("norms", "--out", tmp_path) == 2
    assert run("norms", tmp_path / "missing.rweu", "--out", tmp_path) == 2


def test_lifespan_smoke_run(tmp_path, capsys):
    start = time.perf_counter()
    code = run("lifespan", "--config", CONFIGS / "lifespan-smoke.conf", "--out", tmp_path)
    elapsed = time.perf_counter() - start
    assert code == 0
    assert elapsed < 60
    rows = read_rows(tmp_path / "lifespan.csv")
    assert rows[0] == ["eps", "rotation", "seed", "T_star", "censored"]
    assert sorted(r[1] for r in rows[1:]) == ["off", "on"]
    for r in rows[1:]:
        assert r[4] in ("true", "false")
        assert (r[4] == "true") == (float(r[3]) == 400.0)
    assert "decided pairs" in capsys.readouterr().out
