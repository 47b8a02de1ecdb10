import json
import time

import numpy as np
import pytest
from matplotlib import pyplot as plt
from matplotlib.axes import Axes

from pypctta.aggregation.config import TtaConfig
from pypctta.exceptions import DimensionMismatch, EmptyInput, UsageError
from pypctta.io.manifest import DatasetManifest, ManifestEntry
from pypctta.io.point_cloud import read_point_cloud
from pypctta.predictor.centroid import fit_centroid_classifier
from pypctta.predictor.common import LogitMatrix, _BasePredictor
from pypctta.results.evaluation import STAGES, StageTimer, evaluate_dataset
from pypctta.synth import generate_dataset


class _ConstantPredictor(_BasePredictor):
    """Always predicts class 0."""

    def __init__(self, n_classes: int = 2):
        self._n_classes = n_classes

    @property
    def n_classes(self) -> int:
        return self._n_classes

    @property
    def global_dim(self) -> int:
        return 1

    def extract_global_feature(self, cloud):
        return np.zeros(1)

    def classify_feature(self, feature) -> LogitMatrix:
        return LogitMatrix(np.eye(self._n_classes)[0])


class _HemispherePredictor(_ConstantPredictor):
    """Labels points with z >= 0 as part 0 and the others as part 1."""

    @property
    def supports_segmentation(self) -> bool:
        return True

    def per_point_logits(self, cloud) -> LogitMatrix:
        z = cloud.points[:, 2]
        return LogitMatrix(np.stack([z, -z], axis=1))


@pytest.fixture
def shapes(tmp_path) -> DatasetManifest:
    return generate_dataset(
        tmp_path / "shapes", classes=("sphere", "cube"), per_class=3, n_points=64
    )


@pytest.fixture
def hemispheres(tmp_path) -> DatasetManifest:
    return generate_dataset(
        tmp_path / "hemispheres",
        classes=("sphere",),
        per_class=3,
        n_points=128,
        task="part_segmentation",
    )


def test_constant_classifier_metrics(shapes) -> None:
    config = TtaConfig(method="jitter", samples_m=2)
    report = evaluate_dataset(shapes, _ConstantPredictor(), config, split="test")

    assert report.baseline == {"oAcc": 0.5, "mAcc": 0.5}
    assert report.tta == {"oAcc": 0.5, "mAcc": 0.5}
    assert [entry.index for entry in report.entries] == [2, 5]
    clouds = [entry.cloud for entry in report.entries]
    assert clouds == ["sphere_002.xyz", "cube_002.xyz"]

    document = report.to_dict()
    assert document["task"] == "classification"
    assert document["split"] == "test"
    assert document["n_entries"] == 2
    assert document["config"]["method"] == "jitter"
    assert document["entries"][1] == {
        "index": 5,
        "cloud": "cube_002.xyz",
        "class": 1,
        "baseline": 0,
        "tta": 0,
    }
    assert set(document["timings"]) == set(STAGES) | {"total"}
    assert all(seconds >= 0 for seconds in document["timings"].values())


def test_hemisphere_oracle_is_perfect(hemispheres) -> None:
    config = TtaConfig(method="copy", samples_m=2)
    report = evaluate_dataset(hemispheres, _HemispherePredictor(), config)

    expected = {"mIoU": 1.0, "mInsIoU": 1.0, "mCatIoU": 1.0}
    assert report.baseline == expected
    assert report.tta == expected
    assert len(report.to_dict()["entries"][0]["tta"]) == 128


def test_report_independent_of_thread_count(shapes, monkeypatch) -> None:
    entries = shapes.select("train")
    train = [(read_point_cloud(entry.cloud), entry.class_id) for entry in entries]
    model = fit_centroid_classifier(train, bins=8)
    config = TtaConfig(method="jitter", samples_m=3, master_seed=9)

    monkeypatch.setenv("PCTTA_THREADS", "1")
    single = evaluate_dataset(shapes, model, config).to_dict(include_timings=False)
    monkeypatch.setenv("PCTTA_THREADS", "8")
    many = evaluate_dataset(shapes, model, config).to_dict(include_timings=False)

    assert json.dumps(single, sort_keys=True) == json.dumps(many, sort_keys=True)
    assert "timings" not in single


def test_density_sweep(shapes) -> None:
    config = TtaConfig(method="copy", samples_m=1)
    report = evaluate_dataset(
        shapes, _ConstantPredictor(), config, split="test", densities=[16, 32]
    )

    assert [row.density for row in report.densities] == [16, 32]
    assert report.densities[0].tta == {"oAcc": 0.5, "mAcc": 0.5}

    frame = report.to_pandas()
    assert len(frame) == 6
    assert frame["density"].tolist()[:2] == ["full", "full"]

    axes = report.plot_density_sweep()
    assert len(axes) == 2
    assert all(isinstance(ax, Axes) for ax in axes)
    plt.close("all")

    _, existing = plt.subplots(1, 2)
    assert report.plot_density_sweep(axes=list(existing)) == list(existing)
    plt.close("all")


def test_density_sweep_segmentation_subsamples_labels(hemispheres) -> None:
    config = TtaConfig(method="copy", samples_m=1)
    predictor = _HemispherePredictor()
    report = evaluate_dataset(hemispheres, predictor, config, densities=[32])
    assert report.densities[0].tta["mIoU"] == 1.0


def test_density_at_or_above_cloud_size_keeps_full_predictions(hemispheres) -> None:
    config = TtaConfig(method="jitter", samples_m=2, master_seed=4)
    predictor = _HemispherePredictor()
    report = evaluate_dataset(hemispheres, predictor, config, densities=[128, 500])
    for row in report.densities:
        assert row.baseline == report.baseline
        assert row.tta == report.tta


def test_upsample_tta_holds_accuracy_on_sparse_clouds(tmp_path) -> None:
    start = time.perf_counter()
    manifest = generate_dataset(
        tmp_path / "synthetic",
        classes=("sphere", "cube", "cylinder"),
        per_class=60,
        n_points=2048,
        noise=0.02,
        seed=1,
    )
    entries = manifest.select("train")
    assert len(entries) == 120
    train = [(read_point_cloud(entry.cloud), entry.class_id) for entry in entries]
    model = fit_centroid_classifier(train)

    config = TtaConfig(method="upsample", samples_m=10, master_seed=1)
    report = evaluate_dataset(
        manifest, model, config, split="test", densities=[128, 2048]
    )
    elapsed = time.perf_counter() - start

    gains = {}
    for row in report.densities:
        assert row.tta["oAcc"] >= row.baseline["oAcc"] - 0.005
        gains[row.density] = row.tta["oAcc"] - row.baseline["oAcc"]
    assert gains[128] >= gains[2048]
    assert elapsed < 120.0


def test_plot_without_sweep(shapes) -> None:
    config = TtaConfig(method="copy", samples_m=0)
    report = evaluate_dataset(shapes, _ConstantPredictor(), config)
    with pytest.raises(ValueError, match="density"):
        report.plot_density_sweep()


def test_to_json(tmp_path, shapes) -> None:
    config = TtaConfig(method="copy", samples_m=1)
    report = evaluate_dataset(shapes, _ConstantPredictor(), config, split="test")
    path = tmp_path / "report.json"
    text = report.to_json(path, include_timings=False)
    assert json.loads(path.read_text()) == json.loads(text)
    assert json.loads(text)["metrics"]["baseline"]["oAcc"] == 0.5


def test_compatibility_errors(shapes, hemispheres) -> None:
    config = TtaConfig(method="copy", samples_m=1)
    with pytest.raises(DimensionMismatch):
        evaluate_dataset(shapes, _ConstantPredictor(n_classes=3), config)
    with pytest.raises(UsageError, match="segmentation"):
        evaluate_dataset(hemispheres, _ConstantPredictor(), config)
    with pytest.raises(ValueError, match="Densities"):
        evaluate_dataset(shapes, _ConstantPredictor(), config, densities=[0])


def test_mesh_method_needs_meshes(shapes) -> None:
    entries = tuple(
        ManifestEntry(cloud=entry.cloud, class_id=entry.class_id, split=entry.split)
        for entry in shapes.entries
    )
    manifest = DatasetManifest(
        task="classification", classes=shapes.classes, entries=entries
    )
    config = TtaConfig(method="mesh", samples_m=1)
    with pytest.raises(UsageError, match="mesh"):
        evaluate_dataset(manifest, _ConstantPredictor(), config)


def test_empty_split(shapes) -> None:
    entries = tuple(e for e in shapes.entries if e.split == "train")
    manifest = DatasetManifest(
        task="classification", classes=shapes.classes, entries=entries
    )
    with pytest.raises(EmptyInput):
        evaluate_dataset(manifest, _ConstantPredictor(), TtaConfig(), split="test")


def test_stage_timer() -> None:
    timer = StageTimer()
    with timer.stage("augment"):
        pass
    other = StageTimer()
    other.merge(timer)
    assert set(other.seconds) == set(STAGES)
    assert other.seconds["augment"] == timer.seconds["augment"]
