from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pypctta.common.cloud import PointCloud, require_points
from pypctta.exceptions import DimensionMismatch, IoError, MissingFile, ParseError
from pypctta.predictor.common import LogitMatrix, _BasePredictor
from pypctta.utils import make_rng

MAGIC = b"PCTTAW1"

Layer = Tuple[NDArray[np.float32], NDArray[np.float32]]


def _as_layer(weight: ArrayLike, bias: ArrayLike, name: str) -> Layer:
    w = np.array(weight, dtype=np.float32, copy=True)
    b = np.array(bias, dtype=np.float32, copy=True).reshape(-1)
    if w.ndim != 2:
        raise DimensionMismatch(f"{name}: expected a 2-dimensional weight matrix.")
    if b.shape[0] != w.shape[0]:
        raise DimensionMismatch(
            f"{name}: bias has {b.shape[0]} entries, weight has {w.shape[0]} rows."
        )
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise ValueError(f"{name}: all weights and biases must be finite.")
    w.setflags(write=False)
    b.setflags(write=False)
    return w, b


def _check_chain(layers: Sequence[Layer], input_dim: int, name: str) -> int:
    dim = input_dim
    for i, (weight, _) in enumerate(layers):
        if weight.shape[1] != dim:
            raise DimensionMismatch(
                f"{name} layer {i}: expected {dim} input columns, got {weight.shape[1]}."
            )
        dim = weight.shape[0]
    return dim


def _widen(layers: Sequence[Tuple[NDArray, NDArray]]) -> List[Tuple[NDArray, NDArray]]:
    return [(w.astype(np.float64), b.astype(np.float64)) for w, b in layers]


def _affine(
    x: NDArray[np.float64], layer: Tuple[NDArray, NDArray]
) -> NDArray[np.float64]:
    # einsum keeps every row independent of the other rows in the batch
    weight, bias = layer
    return np.einsum("ij,nj->ni", weight, x) + bias


def _relu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.maximum(x, 0.0)


def _run(
    x: NDArray[np.float64], layers: Sequence[Tuple[NDArray, NDArray]]
) -> NDArray[np.float64]:
    """Affine layers with ReLU between them, none after the last."""
    for i, layer in enumerate(layers):
        x = _affine(x, layer)
        if i < len(layers) - 1:
            x = _relu(x)
    return x


class MlpPredictor(_BasePredictor):
    """
    A PointNet-shaped multilayer perceptron for inference.

    Every point passes through the point layers (ReLU after each). The global
    feature is the coordinate-wise maximum over the points of the last point layer;
    the classification head maps it to C logits. The segmentation head maps each
    point's local feature (the output of the penultimate point layer, or its
    coordinates when there is a single point layer) concatenated with the global
    feature to C logits.

    Weights are stored as float32 and evaluated in float64.
    """

    def __init__(
        self,
        point_layers: Sequence[Tuple[ArrayLike, ArrayLike]],
        cls_head: Sequence[Tuple[ArrayLike, ArrayLike]],
        seg_head: Sequence[Tuple[ArrayLike, ArrayLike]] = (),
    ):
        """
        Parameters
        ----------
        point_layers:
            (weight, bias) pairs of the per-point layers; weights have shape
            (out, in) and the first layer takes 3 inputs.
        cls_head:
            (weight, bias) pairs of the classification head.
        seg_head:
            (weight, bias) pairs of the segmentation head; may be empty for a
            classification-only model.

        Raises
        ------
        DimensionMismatch
            If consecutive layer dimensions do not chain, naming the layer.
        ValueError
            If a section is empty or a weight is not finite.
        """
        if len(point_layers) == 0 or len(cls_head) == 0:
            raise ValueError(
                "The point layers and the classification head must be non-empty."
            )

        self._point_layers = [
            _as_layer(w, b, f"point layer {i}") for i, (w, b) in enumerate(point_layers)
        ]
        self._cls_head = [
            _as_layer(w, b, f"cls head layer {i}") for i, (w, b) in enumerate(cls_head)
        ]
        self._seg_head = [
            _as_layer(w, b, f"seg head layer {i}") for i, (w, b) in enumerate(seg_head)
        ]

        self._global_dim = _check_chain(self._point_layers, 3, "point")
        self._local_dim = (
            3 if len(self._point_layers) == 1 else self._point_layers[-2][0].shape[0]
        )
        self._n_classes = _check_chain(self._cls_head, self._global_dim, "cls head")
        if self._seg_head:
            seg_classes = _check_chain(
                self._seg_head, self._local_dim + self._global_dim, "seg head"
            )
            if seg_classes != self._n_classes:
                raise DimensionMismatch(
                    f"seg head layer {len(self._seg_head) - 1}: outputs {seg_classes} "
                    f"classes, the cls head outputs {self._n_classes}."
                )

        self._point64 = _widen(self._point_layers)
        self._cls64 = _widen(self._cls_head)
        self._seg64 = _widen(self._seg_head)

    @classmethod
    def random(
        cls,
        seed: int,
        n_classes: int,
        point_dims: Sequence[int] = (64, 128, 256),
        seg_hidden: Sequence[int] = (128,),
        scale: float = 0.1,
    ) -> MlpPredictor:
        """
        Builds a model with seeded uniform random weights in [-scale, scale].

        The default shape is the reference architecture 3-64-128-256 with a
        256-C classification head and a (128+256)-128-C segmentation head.

        Parameters
        ----------
        seed:
            Seed of the weight generator.
        n_classes:
            The number of classes C.
        point_dims:
            Output sizes of the point layers.
        seg_hidden:
            Hidden sizes of the segmentation head.
        scale:
            Half-width of the uniform weight distribution.
        """
        if n_classes < 1:
            raise ValueError(f"n_classes must be positive, but got {n_classes}.")
        rng = make_rng(seed)

        def layers(
            dims: Sequence[int], input_dim: int
        ) -> List[Tuple[NDArray, NDArray]]:
            result = []
            for out in dims:
                weight = rng.uniform(-scale, scale, size=(out, input_dim))
                bias = rng.uniform(-scale, scale, size=out)
                result.append((weight, bias))
                input_dim = out
            return result

        point = layers(point_dims, 3)
        local_dim = 3 if len(point_dims) == 1 else point_dims[-2]
        cls_head = layers([n_classes], point_dims[-1])
        seg_head = layers([*seg_hidden, n_classes], local_dim + point_dims[-1])
        return cls(point, cls_head, seg_head)

    @property
    def point_layers(self) -> List[Layer]:
        return self._point_layers

    @property
    def cls_head(self) -> List[Layer]:
        return self._cls_head

    @property
    def seg_head(self) -> List[Layer]:
        return self._seg_head

    @property
    def n_classes(self) -> int:
        return self._n_classes

    @property
    def global_dim(self) -> int:
        return self._global_dim

    @property
    def supports_segmentation(self) -> bool:
        return len(self._seg_head) > 0

    def __repr__(self) -> str:
        dims = [3] + [w.shape[0] for w, _ in self._point_layers]
        return f"MlpPredictor(point_dims={dims}, n_classes={self._n_classes})"

    def _point_features(
        self, cloud: PointCloud
    ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        require_points(cloud)
        local = cloud.points
        x = cloud.points
        for i, layer in enumerate(self._point64):
            x = _relu(_affine(x, layer))
            if i == len(self._point64) - 2:
                local = x
        return local, x

    def extract_global_feature(self, cloud: PointCloud) -> NDArray[np.float64]:
        """
        Max-pools the per-point features of the last point layer.

        Raises
        ------
        EmptyCloud
            If the cloud has no points.
        """
        _, features = self._point_features(cloud)
        return features.max(axis=0)

    def classify_feature(self, feature: NDArray[np.float64]) -> LogitMatrix:
        x = np.asarray(feature, dtype=np.float64).reshape(1, -1)
        return LogitMatrix(_run(x, self._cls64))

    def per_point_logits(self, cloud: PointCloud) -> LogitMatrix:
        """
        Applies the segmentation head to every point's [local feature, global
        feature].

        Raises
        ------
        EmptyCloud
            If the cloud has no points.
        NotImplementedError
            If the model has no segmentation head.
        """
        if not self._seg_head:
            raise NotImplementedError("This model has no segmentation head.")
        local, features = self._point_features(cloud)
        pooled = features.max(axis=0)
        joined = np.concatenate(
            [local, np.broadcast_to(pooled, (local.shape[0], pooled.shape[0]))], axis=1
        )
        return LogitMatrix(_run(joined, self._seg64))


def _pack_section(layers: Sequence[Layer]) -> bytes:
    chunks = [np.array([len(layers)], dtype="<u4").tobytes()]
    for weight, bias in layers:
        chunks.append(np.array(weight.shape, dtype="<u4").tobytes())
        chunks.append(np.ascontiguousarray(weight, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(bias, dtype="<f4").tobytes())
    return b"".join(chunks)


def save_predictor(model: MlpPredictor, path: str | Path) -> None:
    """
    Writes a model in the little-endian weights format.

    The file starts with the ASCII magic ``PCTTAW1`` followed by three sections:
    point layers, classification head and segmentation head. Each section is a
    u32 layer count followed, per layer, by u32 rows, u32 cols, rows * cols f32
    row-major weights and rows f32 biases.

    Raises
    ------
    IoError
        If the file cannot be written.
    """
    payload = MAGIC + b"".join(
        _pack_section(section)
        for section in (model.point_layers, model.cls_head, model.seg_head)
    )
    try:
        Path(path).write_bytes(payload)
    except OSError as error:
        raise IoError(f"Cannot write weights to {path}: {error}") from error


class _Reader:
    def __init__(self, data: bytes, path: str):
        self._data = data
        self._path = path
        self.offset = 0

    def read(self, dtype: str, count: int) -> NDArray:
        size = np.dtype(dtype).itemsize * count
        if self.offset + size > len(self._data):
            raise ParseError(
                f"Unexpected end of file: needed {size} bytes, "
                f"{len(self._data) - self.offset} left.",
                path=self._path,
                offset=self.offset,
            )
        values = np.frombuffer(self._data, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return values

    def section(self) -> List[Tuple[NDArray, NDArray]]:
        (count,) = self.read("<u4", 1)
        layers = []
        for _ in range(int(count)):
            rows, cols = (int(v) for v in self.read("<u4", 2))
            weight = self.read("<f4", rows * cols).reshape(rows, cols)
            bias = self.read("<f4", rows)
            layers.append((weight, bias))
        return layers


def load_predictor(path: str | Path) -> MlpPredictor:
    """
    Reads a model written by `save_predictor`.

    Raises
    ------
    MissingFile
        If the file does not exist.
    ParseError
        If the magic is wrong, the file is truncated or has trailing bytes.
    DimensionMismatch
        If the layer dimensions do not chain, naming the layer.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile([str(path)])
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise ParseError("Not a weights file (bad magic).", path=str(path), offset=0)

    reader = _Reader(data, str(path))
    reader.offset = len(MAGIC)
    point, cls_head, seg_head = reader.section(), reader.section(), reader.section()
    if reader.offset != len(data):
        raise ParseError(
            f"{len(data) - reader.offset} trailing bytes after the last section.",
            path=str(path),
            offset=reader.offset,
        )
    return MlpPredictor(point, cls_head, seg_head)
