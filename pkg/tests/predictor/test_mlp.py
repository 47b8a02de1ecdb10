import numpy as np
import pytest

from pypctta.common.cloud import PointCloud
from pypctta.exceptions import DimensionMismatch, EmptyCloud, MissingFile, ParseError
from pypctta.predictor import load_model
from pypctta.predictor.common import LogitMatrix
from pypctta.predictor.mlp import MAGIC, MlpPredictor, load_predictor, save_predictor


@pytest.fixture
def tiny_model() -> MlpPredictor:
    identity = (np.eye(3), np.zeros(3))
    cls_head = (np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), np.zeros(2))
    seg_head = (
        np.array([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]]),
        np.array([0.0, -1.0]),
    )
    return MlpPredictor([identity], [cls_head], [seg_head])


def test_hand_computed_logits(tiny_model) -> None:
    cloud = PointCloud([[1.0, 2.0, 0.0], [3.0, -1.0, 0.0]])

    assert np.array_equal(tiny_model.extract_global_feature(cloud), [3.0, 2.0, 0.0])
    assert np.array_equal(tiny_model.classify_logits(cloud).values, [[3.0, 2.0]])

    # the local feature of a single point layer model is the coordinates
    logits = tiny_model.per_point_logits(cloud)
    assert np.array_equal(logits.values, [[1.0, 2.0], [3.0, 2.0]])
    assert np.array_equal(logits.labels(), [1, 0])


def test_relu_follows_the_last_point_layer(tiny_model) -> None:
    cloud = PointCloud([[-1.0, -2.0, -3.0], [-4.0, -0.5, -2.0]])
    assert np.array_equal(tiny_model.extract_global_feature(cloud), [0.0, 0.0, 0.0])
    assert np.array_equal(tiny_model.classify_logits(cloud).values, [[0.0, 0.0]])


def test_weights_file_has_one_count_per_section(tmp_path, tiny_model) -> None:
    path = tmp_path / "tiny.bin"
    save_predictor(tiny_model, path)
    data = path.read_bytes()
    assert len(data) == 179

    def header(offset: int) -> list:
        return np.frombuffer(data, dtype="<u4", count=3, offset=offset).tolist()

    # point layers, classification head, segmentation head
    assert header(len(MAGIC)) == [1, 3, 3]
    assert header(67) == [1, 2, 3]
    assert header(111) == [1, 2, 6]


def test_global_feature_is_permutation_invariant(small_model, random_cloud) -> None:
    order = np.random.default_rng(0).permutation(random_cloud.n_points)
    permuted = random_cloud.select(order)

    assert np.array_equal(
        small_model.extract_global_feature(random_cloud),
        small_model.extract_global_feature(permuted),
    )
    assert np.allclose(
        small_model.per_point_logits(random_cloud).values[order],
        small_model.per_point_logits(permuted).values,
        rtol=0.0,
        atol=1e-12,
    )


def test_random_model_shapes(small_model, random_cloud) -> None:
    assert small_model.n_classes == 4
    assert small_model.global_dim == 64
    assert small_model.supports_segmentation
    assert small_model.per_point_logits(random_cloud).values.shape == (128, 4)
    model = MlpPredictor.random(seed=11, n_classes=4, point_dims=(16, 32, 64))
    assert model.n_classes == 4


def test_classify_feature_dimension(small_model) -> None:
    with pytest.raises(DimensionMismatch):
        small_model.classify_logits(np.zeros(5))


def test_chain_mismatch_names_layer() -> None:
    with pytest.raises(DimensionMismatch, match="cls head layer 0"):
        MlpPredictor(
            [(np.zeros((4, 3)), np.zeros(4))], [(np.zeros((2, 5)), np.zeros(2))]
        )
    with pytest.raises(DimensionMismatch, match="bias"):
        MlpPredictor(
            [(np.zeros((4, 3)), np.zeros(3))], [(np.zeros((2, 4)), np.zeros(2))]
        )


def test_without_segmentation_head(random_cloud) -> None:
    model = MlpPredictor(
        [(np.eye(3), np.zeros(3))], [(np.ones((2, 3)), np.zeros(2))]
    )
    assert not model.supports_segmentation
    with pytest.raises(NotImplementedError):
        model.per_point_logits(random_cloud)


def test_empty_cloud(small_model) -> None:
    with pytest.raises(EmptyCloud):
        small_model.extract_global_feature(PointCloud(np.empty((0, 3))))


def test_save_load(tmp_path, small_model, random_cloud) -> None:
    path = tmp_path / "model.bin"
    save_predictor(small_model, path)
    assert path.read_bytes().startswith(MAGIC)

    loaded = load_predictor(path)
    for original, restored in zip(small_model.point_layers, loaded.point_layers):
        assert np.array_equal(original[0], restored[0])
        assert np.array_equal(original[1], restored[1])
    assert np.array_equal(
        small_model.per_point_logits(random_cloud).values,
        loaded.per_point_logits(random_cloud).values,
    )
    assert isinstance(load_model(path), MlpPredictor)


def test_load_errors(tmp_path, small_model) -> None:
    path = tmp_path / "model.bin"
    save_predictor(small_model, path)
    data = path.read_bytes()

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(data[:-3])
    with pytest.raises(ParseError, match="end of file"):
        load_predictor(truncated)

    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(data + b"\x00")
    with pytest.raises(ParseError, match="trailing"):
        load_predictor(trailing)

    wrong = tmp_path / "wrong.bin"
    wrong.write_bytes(b"NOTMAGIC" + data[len(MAGIC) :])
    with pytest.raises(ParseError, match="magic"):
        load_predictor(wrong)

    with pytest.raises(MissingFile):
        load_model(tmp_path / "absent.bin")


def test_logit_matrix() -> None:
    matrix = LogitMatrix([1.0, 3.0, 3.0])
    assert matrix.values.shape == (1, 3)
    assert matrix.labels().tolist() == [1]
    assert not matrix.values.flags.writeable
    with pytest.raises(ValueError):
        LogitMatrix([[np.nan, 1.0]])
