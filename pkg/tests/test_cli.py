"""The command-line surface, driven in-process."""

import json
import zipfile

import pytest

from skillplan.cli import main
from skillplan.harness import BundleError, load_bundle


@pytest.fixture(scope="module")
def cli_artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    demos = tmp / "demos.jsonl"
    bundle = tmp / "bundle.zip"
    assert main([
        "gen-demos", "--env", "cover", "--demos", "8", "--seed", "0",
        "--out", str(demos),
    ]) == 0
    assert main([
        "train", "--env", "cover", "--seed", "0",
        "--policy-epochs", "200", "--generator-epochs", "250",
        "--classifier-epochs", "150", "--workers", "1",
        "--in", str(demos), "--out", str(bundle),
    ]) == 0
    return tmp, demos, bundle


def test_cli_gen_train_inspect(cli_artifacts, capsys):
    tmp, demos, bundle = cli_artifacts
    assert bundle.exists()
    assert main(["inspect", str(bundle)]) == 0
    out = capsys.readouterr().out
    assert out.count("cover-op") >= 2
    assert "preconditions" in out


def test_cli_eval_writes_csv(cli_artifacts, capsys):
    tmp, demos, bundle = cli_artifacts
    csv = tmp / "metrics.csv"
    assert main([
        "eval", "--env", "cover", "--seed", "0", "--eval-tasks", "3",
        "--timeout", "20", "--workers", "1",
        "--policy-epochs", "200", "--generator-epochs", "250",
        "--classifier-epochs", "150",
        "--bundle", str(bundle), "--csv", str(csv),
    ]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("seed,task,solved")
    assert len(lines) == 4
    assert "tasks solved" in capsys.readouterr().out


def test_cli_config_file_with_flag_override(cli_artifacts, tmp_path, capsys):
    tmp, demos, bundle = cli_artifacts
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"environment": "cover", "num_demos": 3}))
    out_demos = tmp_path / "demos.jsonl"
    assert main([
        "gen-demos", "--config", str(config), "--demos", "2",
        "--out", str(out_demos),
    ]) == 0
    assert "wrote 2 demos" in capsys.readouterr().out


def test_corrupt_bundle_names_missing_section(cli_artifacts, tmp_path):
    tmp, demos, bundle = cli_artifacts
    broken = tmp_path / "broken.zip"
    with zipfile.ZipFile(bundle) as src, zipfile.ZipFile(broken, "w") as dst:
        for name in src.namelist():
            if name.endswith("cover-op0/meta.json"):
                continue
            dst.writestr(name, src.read(name))
    with pytest.raises(BundleError, match="meta.json"):
        load_bundle(broken)
