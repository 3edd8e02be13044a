import csv
import subprocess
import sys

import numpy as np
import pytest

from plm.cli import main
from plm.experiments import collect_runs, read_run

QUICK = ["--set", "max_outer=10,inner_epochs=50,prune_max_outer=3,prune_inner_epochs=50,init_epochs=500"]


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_train_single_version(tmp_path, capsys):
    out = tmp_path / "runs"
    code, _ = run(["train", "--synthetic", "n=200", "m=5", "--version", "LTS:500", "--seed", 7,
                   "--out", out, *QUICK], capsys)
    assert code == 0
    d = out / "LTS-500" / "run_000"
    for name in ("report.txt", "stages.csv", "network.txt", "metrics.csv", "timing.csv"):
        assert (d / name).is_file()
    assert (out / "summary.csv").is_file() and (out / "trajectories.csv").is_file()


def test_missing_dataset(tmp_path, capsys):
    code, cap = run(["train", "--out", tmp_path], capsys)
    assert code != 0
    assert "usage" in cap.err and "dataset" in cap.err


def test_unreadable_dataset(tmp_path, capsys):
    code, cap = run(["train", "--dataset", tmp_path / "nope.csv", "--out", tmp_path], capsys)
    assert code != 0 and "nope.csv" in cap.err


def test_bad_setting(tmp_path, capsys):
    code, cap = run(["train", "--synthetic", "n=20", "--set", "bogus=1", "--out", tmp_path], capsys)
    assert code == 2 and "bogus" in cap.err


def test_degenerate_data_cites_instances(tmp_path, capsys):
    path = tmp_path / "dup.csv"
    path.write_text("a,y\n" + "".join(f"{i},{i % 3}\n" for i in range(20)) + "3,9\n3,-9\n", encoding="utf-8")
    code, cap = run(["train", "--dataset", path, "--train-fraction", "0.95", "--version", "LTS:0",
                     "--out", tmp_path / "o", *QUICK], capsys)
    assert code == 1 and "instances" in cap.err


def test_matrix_produces_one_report_per_run(tmp_path, capsys):
    out = tmp_path / "m"
    code, _ = run(["train", "--synthetic", "n=20", "m=2", "--n-datasets", 20, "--out", out, *QUICK], capsys)
    assert code == 0
    assert len(list(out.glob("*/run_*/report.txt"))) == 80
    with (out / "summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 80
    for r in rows:
        if r["understanding_pct"]:
            assert float(r["understanding_pct"]) + float(r["cramming_pct"]) == pytest.approx(100.0)


def test_report_recomputes_from_files(tmp_path, capsys):
    out = tmp_path / "r"
    run(["train", "--synthetic", "n=40", "m=2", "--version", "LTS:100", "--version", "PO:100",
         "--n-datasets", 2, "--out", out, *QUICK], capsys)
    code, cap = run(["report", "--out", out], capsys)
    assert code == 0
    assert "Hidden nodes at the end of learning" in cap.out and "Ratio" in cap.out
    for s in collect_runs(out):
        d = out / s.version.replace(":", "-") / f"run_{s.dataset:03d}"
        with (d / "stages.csv").open() as fh:
            stages = list(csv.DictReader(fh))
        assert s.prunes == sum(int(r["prunes"]) for r in stages)
        assert s.final_p == (int(stages[-1]["p_after"]) if stages else s.final_p)
    assert (out / "tables.txt").is_file() and (out / "runs.csv").is_file()


def test_single_run_report(tmp_path, capsys):
    out = tmp_path / "one"
    run(["train", "--synthetic", "n=30", "m=2", "--version", "LTS:0", "--out", out, *QUICK], capsys)
    code, cap = run(["report", "--out", out], capsys)
    assert code == 0
    header = [line for line in cap.out.splitlines() if line.strip().startswith("LTS:0")]
    assert header and all(line.split() == ["LTS:0"] for line in header)


def test_report_without_runs(tmp_path, capsys):
    code, cap = run(["report", "--out", tmp_path], capsys)
    assert code == 1 and "no run directories" in cap.err


def test_compare_table(tmp_path, capsys):
    out = tmp_path / "c"
    code, cap = run(["compare", "--synthetic", "n=40", "m=2", "noise=0.05", "--n-datasets", 2, "--out", out,
                     *QUICK], capsys)
    assert code == 0
    text = (out / "compare.txt").read_text()
    header = next(line for line in text.splitlines() if "Linear Regression" in line)
    for name in ("Linear Regression", "2LNN_13", "2LNN_23", "2LNN_v", "PLM-LTS-500"):
        assert name in header

    with (out / "compare.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    lin = [float(r["train_mae"]) for r in rows if r["model"] == "Linear Regression"]
    eps = float(text.split("epsilon = ")[1].split()[0])
    assert abs(eps - 2 * np.mean(lin)) <= 1e-12

    for model in ("Linear Regression", "2LNN_13", "2LNN_23", "2LNN_v", "PLM-LTS-500"):
        for col in ("train_mae", "test_mae"):
            vals = [float(r[col]) for r in rows if r["model"] == model]
            assert min(vals) <= np.mean(vals) <= max(vals)


def test_synth_data(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _ = run(["synth-data", "--synthetic", "n=50", "m=3", "noise=0.1", "--seed", 4, "--out", path], capsys)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,y" and len(lines) == 51


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[data]\nsynthetic = n=30 m=2\n\n[run]\nversions = LTS:0\nseed = 3\n\n"
        "[plm]\nepsilon = 0.2\nmax_outer = 5\ninner_epochs = 20\ninit_epochs = 100\n",
        encoding="utf-8",
    )
    out = tmp_path / "cfg"
    code, _ = run(["train", "--config", cfg, "--epsilon", "0.15", "--out", out], capsys)
    assert code == 0
    report = (out / "LTS-0" / "run_000" / "report.txt").read_text()
    assert "epsilon=0.15" in report


def test_env_default_output(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PLM_OUT", str(tmp_path / "env"))
    code, _ = run(["train", "--synthetic", "n=20", "m=2", "--version", "LTS:0", *QUICK], capsys)
    assert code == 0 and (tmp_path / "env" / "LTS-0" / "run_000" / "report.txt").is_file()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "plm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "train" in proc.stdout


def test_read_run_incomplete(tmp_path):
    (tmp_path / "run_000").mkdir()
    from plm.errors import ParseError

    with pytest.raises(ParseError):
        read_run(tmp_path / "run_000")
