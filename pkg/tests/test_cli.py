import json

import pytest

from locpriv.cli import main


BASE = {
    "model": "iid2",
    "density": {"kind": "uniform-simplex"},
    "n_grid": [3],
    "schedule": {"c": 1.0, "beta": 1.2},
    "trials": 4,
    "k": "last",
    "metrics": ["mi", "accuracy"],
    "seed": 5,
    "out_path": "results.csv",
}


def write_config(tmp_path, name="cfg.json", **overrides):
    raw = dict(BASE)
    raw.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def test_simulate_success(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert out.exists()
    assert "wrote" in capsys.readouterr().out


def test_simulate_rejects_multi_cell(tmp_path, capsys):
    cfg = write_config(tmp_path, n_grid=[2, 4])
    assert main(["simulate", "--config", cfg]) == 2
    assert "config error" in capsys.readouterr().err


def test_sweep_deterministic_across_threads(tmp_path):
    cfg = write_config(tmp_path, n_grid=[2, 4], metrics=["mi", "accuracy", "weights"])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a), "--threads", "1"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_seed_override_changes_output(tmp_path):
    cfg = write_config(tmp_path)
    a, b, c = (tmp_path / f"{x}.csv" for x in "abc")
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b), "--seed", "5"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(c), "--seed", "6"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_sweep_env_thread_override(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    out = tmp_path / "env.csv"
    monkeypatch.setenv("LOCPRIV_THREADS", "2")
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    monkeypatch.setenv("LOCPRIV_THREADS", "nope")
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 2


def test_config_errors_exit_2(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["sweep", "--config", missing]) == 2
    cfg = write_config(tmp_path, name="bad.json", bogus_key=1)
    assert main(["sweep", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert err.count("\n") >= 1 and "config error" in err


def test_runtime_errors_exit_1(tmp_path):
    cfg = write_config(tmp_path)
    out = str(tmp_path / "no_such_dir" / "x.csv")
    assert main(["sweep", "--config", cfg, "--out", out]) == 1


def test_argparse_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep"])  # --config is required
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["lemma", "--alpha", "1.0"])
    assert exc.value.code == 2


def test_lemma_command(tmp_path):
    out = tmp_path / "lemma.csv"
    code = main(
        [
            "lemma",
            "--alpha", "1.0",
            "--theta", "0.05",
            "--phi", "0.1",
            "--m-grid", "100,1000",
            "--n-grid", "3,4",
            "--trials", "5",
            "--seed", "9",
            "--out", str(out),
        ]
    )
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "experiment_id,model,n,m,beta,trial,metric,value,std_error,seed"


def test_lemma_rejects_bad_exponents(tmp_path, capsys):
    code = main(
        [
            "lemma",
            "--alpha", "1.0",
            "--theta", "0.6",
            "--phi", "0.8",
            "--m-grid", "100",
            "--n-grid", "3",
            "--trials", "5",
            "--seed", "9",
            "--out", str(tmp_path / "x.csv"),
        ]
    )
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_audit_command(tmp_path, capsys):
    traces = tmp_path / "traces.csv"
    traces.write_text(
        "user_id,time,location\n"
        "u1,1,a\nu1,2,a\nu1,3,b\nu1,4,a\n"
        "u2,1,b\nu2,2,b\nu2,3,b\nu2,4,a\n"
    )
    code = main(
        [
            "audit",
            "--traces", str(traces),
            "--model", "iid",
            "--n", "100",
            "--alpha-margin", "0.5",
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["recommended_max_observations"] == 1000
    assert report["threshold_exponent"] == 2.0

    out = tmp_path / "report.json"
    code = main(
        [
            "audit",
            "--traces", str(traces),
            "--model", "iid",
            "--n", "100",
            "--alpha-margin", "0.5",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert json.loads(out.read_text())["recommended_max_observations"] == 1000


def test_audit_markov_requires_graph(tmp_path, capsys):
    traces = tmp_path / "t.csv"
    traces.write_text("user_id,time,location\nu1,1,1\nu1,2,2\n")
    code = main(
        ["audit", "--traces", str(traces), "--model", "markov", "--n", "10",
         "--alpha-margin", "0.1"]
    )
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_audit_markov_with_graph(tmp_path):
    graph = tmp_path / "graph3.csv"
    graph.write_text("from,to,free\n1,1,1\n1,2,1\n1,3,0\n2,3,0\n3,1,0\n3,2,1\n")
    traces = tmp_path / "m.csv"
    traces.write_text(
        "user_id,time,location\n"
        "u1,1,1\nu1,2,1\nu1,3,2\nu1,4,3\nu1,5,1\n"
        "u2,1,1\nu2,2,3\nu2,3,2\nu2,4,3\nu2,5,2\n"
    )
    out = tmp_path / "report.json"
    code = main(
        [
            "audit",
            "--traces", str(traces),
            "--model", "markov",
            "--graph", str(graph),
            "--n", "100",
            "--alpha-margin", str(1 / 6),
            "--out", str(out),
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["recommended_max_observations"] == 10
    assert report["d"] == 3
