import os

import numpy as np
import pytest
import yaml

from invrec import cli
from invrec import experiments as ex
from invrec import model as md
from invrec import model_io
from invrec import scm as sc


def _small_params():
    return ex.SubclassExperimentParams(n_per_env=400)


def _write_model(path, corrupt=False):
    scm = ex.build_subclass_scm(_small_params(), sc.GRAPH_R_TO_XSP)
    model_io.save_model(scm, path)
    if corrupt:
        doc = yaml.safe_load(open(path))
        doc["factors"]["y"]["table"] = [0.7, 0.7]  # not a probability row
        with open(path, "w") as fh:
            yaml.safe_dump(doc, fh)
    return path


def _write_config(path, **entries):
    with open(path, "w") as fh:
        yaml.safe_dump(entries, fh)
    return str(path)


# ---------------------------------------------------------------------------
# validate


def test_validate_ok_prints_canonical_form(tmp_path, capsys):
    path = _write_model(str(tmp_path / "model.yaml"))
    assert cli.main(["validate", path]) == 0
    out = capsys.readouterr().out
    assert "variables" in out and "x_sp" in out


def test_validate_violations_exit_1(tmp_path, capsys):
    path = _write_model(str(tmp_path / "model.yaml"), corrupt=True)
    assert cli.main(["validate", path]) == 1
    assert "y" in capsys.readouterr().out


def test_validate_missing_file_exit_2(tmp_path):
    assert cli.main(["validate", str(tmp_path / "nope.yaml")]) == 2


def test_validate_unreadable_file_exit_2(tmp_path):
    path = tmp_path / "garbage.yaml"
    path.write_text("providers: [1, 2\n")
    assert cli.main(["validate", str(path)]) == 2


# ---------------------------------------------------------------------------
# gen / train / eval / verify round trip


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run gen -> train once; several tests inspect the artifacts."""
    root = tmp_path_factory.mktemp("pipeline")
    gen_dir = root / "gen"
    cfg = _write_config(
        str(root / "gen.yaml"),
        n_per_env=400,
        envs=[0, 1],
    )
    assert cli.main(["gen", "--config", cfg, "--seed", "0", "--out", str(gen_dir)]) == 0
    datasets = [str(gen_dir / f"data_env{e}.csv") for e in (0, 1)]
    train_dir = root / "train"
    train_cfg = _write_config(
        str(root / "train.yaml"),
        datasets=datasets,
        epochs=3,
        batch_size=64,
        learning_rate=0.1,
        model="linear",
    )
    rc = cli.main(
        ["train", "--config", train_cfg, "--seed", "0", "--out", str(train_dir)]
    )
    assert rc == 0
    return {
        "root": root,
        "gen_dir": gen_dir,
        "datasets": datasets,
        "train_cfg": train_cfg,
        "checkpoint": str(train_dir / "checkpoint.txt"),
        "history": str(train_dir / "history.csv"),
    }


def test_gen_writes_model_and_datasets(pipeline):
    assert os.path.exists(pipeline["gen_dir"] / "model.yaml")
    for p in pipeline["datasets"]:
        assert os.path.exists(p)
    ds = sc.DiscreteDataset.from_csv(pipeline["datasets"][0])
    assert len(ds) == 400
    assert set(ds.variables) >= {"x_sp", "x_ac", "r", "y"}


def test_train_writes_checkpoint_and_history(pipeline):
    assert os.path.exists(pipeline["checkpoint"])
    p = md.load_checkpoint(pipeline["checkpoint"])
    assert p.input_dim == 3
    lines = open(pipeline["history"]).read().strip().splitlines()
    assert lines[0] == "epoch,loss,penalta,lambda".replace("penalta", "penalty")
    assert len(lines) == 1 + 3


def test_eval_reports_accuracy(pipeline, capsys):
    rc = cli.main(
        ["eval", "--config", pipeline["train_cfg"], pipeline["checkpoint"]]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "overall: accuracy=" in out
    acc = float(out.strip().splitlines()[-1].split("=")[1])
    assert 0.5 < acc <= 1.0


def test_eval_width_mismatch_exit_1(pipeline, tmp_path, capsys):
    bad = md.init(md.LinearKind(), 5, seed=0)
    path = str(tmp_path / "bad.txt")
    md.save_checkpoint(bad, path)
    assert cli.main(["eval", "--config", pipeline["train_cfg"], path]) == 1
    assert "feature width" in capsys.readouterr().err


def test_eval_missing_checkpoint_exit_2(pipeline, tmp_path):
    rc = cli.main(
        ["eval", "--config", pipeline["train_cfg"], str(tmp_path / "none.txt")]
    )
    assert rc == 2


def test_verify_runs_and_reports(pipeline, tmp_path, capsys):
    # a scorer reading only the label-conditionally-invariant channel
    invariant = md.Predictor(md.LinearKind(), 3, np.array([0.0, 0.0, 1.0, 0.0]))
    path = str(tmp_path / "inv.txt")
    md.save_checkpoint(invariant, path)
    cfg = _write_config(
        str(tmp_path / "verify.yaml"),
        datasets=pipeline["datasets"],
        n_permutations=100,
        penalty="conditional",
    )
    rc = cli.main(["verify", "--config", cfg, "--seed", "0", path])
    out = capsys.readouterr().out
    assert "p_value=" in out
    assert rc in (0, 1)


def test_train_missing_datasets_exit_2(tmp_path):
    cfg = _write_config(str(tmp_path / "c.yaml"), epochs=1)
    assert cli.main(["train", "--config", cfg]) == 2


# ---------------------------------------------------------------------------
# gradcheck


def test_gradcheck_passes(capsys):
    assert cli.main(["gradcheck", "--seed", "0"]) == 0
    assert "worst relative error" in capsys.readouterr().out


def test_gradcheck_detects_injected_fault():
    assert cli.main(["gradcheck", "--seed", "0", "--break-gradient"]) == 1


# ---------------------------------------------------------------------------
# reproduce


def test_reproduce_appendix_a_byte_identical(tmp_path, capsys):
    cfg = _write_config(str(tmp_path / "c.yaml"), n_per_env=400)
    d1, d2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert cli.main(["reproduce", "appendixA", "--config", cfg,
                     "--seed", "3", "--out", d1]) == 0
    first = capsys.readouterr().out
    assert cli.main(["reproduce", "appendixA", "--config", cfg,
                     "--seed", "3", "--out", d2]) == 0
    second = capsys.readouterr().out
    assert first.replace(d1, "") == second.replace(d2, "")
    csv1 = open(os.path.join(d1, "appendixA_3.csv")).read()
    csv2 = open(os.path.join(d2, "appendixA_3.csv")).read()
    assert csv1 == csv2
    assert "pooled_total_variation=" in first


def test_reproduce_unknown_target_is_usage_error():
    with pytest.raises(SystemExit):
        cli.main(["reproduce", "fig9"])


# ---------------------------------------------------------------------------
# seed resolution


def test_seed_resolution_order(tmp_path, monkeypatch):
    cfg = _write_config(str(tmp_path / "c.yaml"), seed=5)
    ns_flag = cli.build_parser().parse_args(["gradcheck", "--seed", "9"])
    assert cli._resolve_seed(ns_flag, cli._load_config(cfg)) == 9
    ns = cli.build_parser().parse_args(["gradcheck"])
    assert cli._resolve_seed(ns, cli._load_config(cfg)) == 5
    monkeypatch.setenv("INVREC_SEED", "7")
    assert cli._resolve_seed(ns, {}) == 7
    monkeypatch.delenv("INVREC_SEED")
    assert cli._resolve_seed(ns, {}) == 0


def test_bad_env_seed_is_usage_error(monkeypatch):
    monkeypatch.setenv("INVREC_SEED", "not-a-number")
    ns = cli.build_parser().parse_args(["gradcheck"])
    with pytest.raises(cli.UsageError):
        cli._resolve_seed(ns, {})


def test_config_must_be_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(cli.UsageError):
        cli._load_config(str(path))
