import json

import pytest

from hedgefuzzy.cli import loads_model, main, read_config_file, ConfigError


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train") / "run"
    rc = main(["train", "--clusters", "1", "--split", "0.6", "--seed", "42", "--out", str(out)])
    assert rc == 0
    return out


def test_train_artifacts(trained, capsys):
    names = sorted(p.name for p in trained.iterdir())
    assert names == [
        "confusion_test.csv",
        "history.csv",
        "model.txt",
        "report.txt",
        "train_normalized.csv",
        "train_normalized.csv.meta.json",
    ]
    report = (trained / "report.txt").read_text()
    assert "train accuracy" in report and "test accuracy" in report
    rb, norm, fnames, cnames = loads_model((trained / "model.txt").read_text())
    assert rb.n_rules == 3
    assert norm.mode == "minmax"
    assert fnames[0] == "T3-resin uptake test"


def test_every_artifact_records_seed(trained):
    for p in trained.iterdir():
        if p.name == "train_normalized.csv":
            continue  # data file; described by its sidecar
        if p.suffix == ".json":
            meta = json.loads(p.read_text())
            assert meta["seed"] == 42 and meta["run_config"]["seed"] == 42
        else:
            assert "# seed=42" in p.read_text(), p.name


def test_identical_config_gives_identical_bytes(trained, tmp_path):
    # same RunConfig, including the output path, written twice
    first = {p.name: p.read_bytes() for p in trained.iterdir()}
    assert main(["train", "--clusters", "1", "--split", "0.6", "--seed", "42", "--out", str(trained)]) == 0
    assert {p.name: p.read_bytes() for p in trained.iterdir()} == first


def test_missing_data_file(tmp_path, capsys):
    rc = main(["train", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "file not found" in capsys.readouterr().err


def test_empty_data_file(tmp_path, capsys):
    f = tmp_path / "empty.csv"
    f.write_text("")
    assert main(["train", "--data", str(f), "--out", str(tmp_path / "o")]) == 2
    assert "no rows" in capsys.readouterr().err


def test_zero_clusters_rejected_before_work(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["train", "--clusters", "0", "--out", str(out)]) == 2
    assert "clusters" in capsys.readouterr().err
    assert not out.exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_select_reports_kept_features(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["select", "--seed", "42", "--out", str(out)]) == 0
    text = (out / "selection.txt").read_text()
    assert "kept: 1, 2, 3, 5" in text
    assert "dropped: 4" in text
    assert (out / "selection.csv").read_text().splitlines()[-1] == "kept,1,1,1,0,1"


def test_product_policy_flag(tmp_path):
    out = tmp_path / "p"
    assert main(["select", "--policy", "product", "--tau", "0.5", "--seed", "42", "--out", str(out)]) == 0
    text = (out / "selection.txt").read_text()
    assert "# policy=threshold-product" in text
    assert "# tau=0.5" in text


def test_export_rules(trained, tmp_path, capsys):
    out = tmp_path / "rules.txt"
    assert main(["export-rules", str(trained / "model.txt"), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert [ln.split(":")[0] for ln in lines] == ["R1", "R2", "R3"]


def test_export_unreadable_model(tmp_path, capsys):
    assert main(["export-rules", str(tmp_path / "missing.txt")]) != 0
    bad = tmp_path / "bad.txt"
    bad.write_text("not a model\n")
    assert main(["export-rules", str(bad)]) == 1


def test_cv_detail_rows(tmp_path):
    out = tmp_path / "cv"
    assert main(["cv", "--k", "4", "--seeds", "1,2,3,4,5", "--max-iter", "40", "--out", str(out)]) == 0
    rows = [ln for ln in (out / "cv_folds.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == 1 + 20


def test_evaluate_with_surface(trained, tmp_path):
    out = tmp_path / "e"
    assert main(["evaluate", "--model", str(trained / "model.txt"), "--surface", "1,2", "--resolution", "5", "--out", str(out)]) == 0
    grid = [ln for ln in (out / "surface.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(grid) == 1 + 25
    assert "accuracy" in (out / "evaluation.txt").read_text()


def test_evaluate_mismatched_features(trained, tmp_path, capsys):
    f = tmp_path / "three.csv"
    f.write_text("1,0.1,0.2,0.3\n2,0.4,0.5,0.6\n")
    out = tmp_path / "e"
    assert main(["evaluate", "--model", str(trained / "model.txt"), "--data", str(f), "--out", str(out)]) == 1
    assert "features" in capsys.readouterr().err
    assert not out.exists()


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nclusters = 2\nseed = 7\nmax_iter = 30\n")
    out = tmp_path / "c"
    assert main(["train", "--config", str(cfg), "--seed", "8", "--out", str(out)]) == 0
    model = (out / "model.txt").read_text()
    assert "# clusters=2" in model and "# seed=8" in model
    assert loads_model(model)[0].n_rules == 6


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colours = 3\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg)
    assert main(["train", "--config", str(cfg)]) == 2


def test_grad_check_command(capsys):
    assert main(["grad-check", "--trials", "2"]) == 0
    assert "worst" in capsys.readouterr().out
