import json
from pathlib import Path

import numpy as np
import pytest

from pypctta.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from pypctta.io.labels import read_labels
from pypctta.io.point_cloud import read_point_cloud, write_point_cloud
from pypctta.predictor.mlp import save_predictor
from pypctta.synth import sample_shape


@pytest.fixture
def cloud_file(tmp_path) -> Path:
    cloud, _ = sample_shape("sphere", 256, seed=1)
    path = tmp_path / "sphere.xyz"
    write_point_cloud(cloud, path)
    return path


@pytest.fixture
def model_file(tmp_path, small_model) -> Path:
    path = tmp_path / "model.bin"
    save_predictor(small_model, path)
    return path


def _error(capsys) -> str:
    return capsys.readouterr().err.strip()


def test_augment_writes_clouds_and_provenance(tmp_path, cloud_file) -> None:
    output = tmp_path / "augmented"
    base = ["augment", "-i", str(cloud_file), "-o", str(output)]
    code = main(base + ["--method", "jitter", "--samples", "3"])
    assert code == EXIT_OK
    assert sorted(p.name for p in output.glob("aug_*.xyz")) == [
        "aug_000.xyz",
        "aug_001.xyz",
        "aug_002.xyz",
    ]
    provenance = json.loads((output / "provenance.json").read_text())
    assert provenance["method"] == "jitter"
    assert provenance["samples"] == 3
    assert len(provenance["seeds"]) == 3


def test_augment_upsample_target(tmp_path, cloud_file) -> None:
    output = tmp_path / "upsampled"
    base = ["augment", "-i", str(cloud_file), "-o", str(output)]
    code = main(base + ["--samples", "2", "--target", "300", "--format", "ply"])
    assert code == EXIT_OK
    assert read_point_cloud(output / "aug_001.ply").n_points == 300


def test_augment_mesh_requires_mesh(tmp_path, cloud_file, capsys) -> None:
    base = ["augment", "-i", str(cloud_file), "-o", str(tmp_path / "out")]
    code = main(base + ["--method", "mesh"])
    assert code == EXIT_USAGE
    assert _error(capsys) == "pctta: error: UsageError: --method mesh requires --mesh"


def test_classify_none_and_copy_agree(cloud_file, model_file, capsys) -> None:
    base = ["classify", "-m", str(model_file), "-i", str(cloud_file)]
    assert main(base + ["--tta", "none"]) == 0
    none = json.loads(capsys.readouterr().out)
    assert none["label"] == none["baseline_label"]
    assert none["logits"] == none["baseline_logits"]
    assert none["config"]["samples"] == 0

    assert main(base + ["--tta", "copy", "--samples", "5"]) == 0
    copy = json.loads(capsys.readouterr().out)
    assert copy["label"] == none["label"]
    assert np.allclose(copy["logits"], none["logits"], rtol=0.0, atol=1e-6)
    assert set(copy["timings"]) >= {"augment", "inference", "aggregation"}


def test_classify_writes_file(tmp_path, cloud_file, model_file) -> None:
    output = tmp_path / "result.json"
    base = ["classify", "-m", str(model_file), "-i", str(cloud_file)]
    code = main(base + ["--tta", "jitter", "--samples", "2", "-o", str(output)])
    assert code == EXIT_OK
    assert json.loads(output.read_text())["config"]["method"] == "jitter"


def test_segment(tmp_path, cloud_file, model_file, capsys) -> None:
    labels = tmp_path / "labels.txt"
    base = ["segment", "-m", str(model_file), "-i", str(cloud_file), "-o", str(labels)]
    options = ["--tta", "jitter", "--samples", "2", "--agg", "max", "--k", "2"]
    code = main(base + options)
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_points"] == 256
    assert summary["config"]["agg_mode"] == "max"
    assert summary["config"]["neighbor_k"] == 2
    assert read_labels(labels).shape == (256,)
    assert read_labels(labels).max() < 4


def test_segment_invalid_k(tmp_path, cloud_file, model_file, capsys) -> None:
    labels = tmp_path / "l.txt"
    base = ["segment", "-m", str(model_file), "-i", str(cloud_file), "-o", str(labels)]
    code = main(base + ["--k", "0"])
    assert code == EXIT_USAGE
    assert _error(capsys).startswith("pctta: error: UsageError:")


def test_missing_model(tmp_path, cloud_file, capsys) -> None:
    code = main(["classify", "-m", str(tmp_path / "absent.bin"), "-i", str(cloud_file)])
    assert code == EXIT_FAILURE
    message = _error(capsys)
    assert message.startswith("pctta: error: MissingFile:")
    assert "\n" not in message


def test_corrupt_model(tmp_path, cloud_file, capsys) -> None:
    path = tmp_path / "model.bin"
    path.write_bytes(b"PCTTAW1\x01")
    assert main(["classify", "-m", str(path), "-i", str(cloud_file)]) == EXIT_FAILURE
    assert _error(capsys).startswith("pctta: error: ParseError:")


def test_synth_fit_eval(tmp_path, capsys) -> None:
    data = tmp_path / "data"
    options = ["--per-class", "3", "--points", "64", "--noise", "0.02"]
    code = main(["synth", "-o", str(data), "--classes", "sphere,cube"] + options)
    assert code == EXIT_OK
    assert "6 clouds" in capsys.readouterr().out

    model = tmp_path / "centroids.json"
    manifest = str(data / "manifest.json")
    assert main(["fit", "--manifest", manifest, "-o", str(model)]) == 0

    report_path = tmp_path / "report.json"
    plot_path = tmp_path / "sweep.png"
    base = ["eval", "--manifest", manifest, "-m", str(model), "-o", str(report_path)]
    options = ["--tta", "jitter", "--samples", "2", "--split", "test"]
    sweep = ["--density-sweep", "16,32", "--plot", str(plot_path)]
    code = main(base + options + sweep)
    assert code == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report["task"] == "classification"
    assert report["n_entries"] == 2
    assert set(report["metrics"]["tta"]) == {"oAcc", "mAcc"}
    assert [row["density"] for row in report["densities"]] == [16, 32]
    assert "timings" in report
    assert plot_path.is_file()


def test_eval_flag_errors(tmp_path, capsys) -> None:
    data = tmp_path / "data"
    options = ["--classes", "sphere", "--per-class", "3", "--points", "32"]
    main(["synth", "-o", str(data)] + options)
    model = tmp_path / "centroids.json"
    main(["fit", "--manifest", str(data / "manifest.json"), "-o", str(model)])
    manifest = str(data / "manifest.json")

    base = ["eval", "--manifest", manifest, "-m", str(model)]
    assert main(base + ["--task", "part_segmentation"]) == EXIT_USAGE
    assert main(base + ["--agg", "max"]) == EXIT_USAGE
    absent = str(tmp_path / "absent.json")
    assert main(["eval", "--manifest", absent, "-m", str(model)]) == EXIT_FAILURE


def test_usage_errors(capsys) -> None:
    assert main([]) == EXIT_USAGE
    assert main(["rotate"]) == EXIT_USAGE
    assert main(["synth", "-o", "x", "--classes", "torus"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as error:
        main(["--version"])
    assert error.value.code == 0
