from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np
import pandas as pd
from matplotlib.axes import Axes
from numpy.typing import NDArray
from tqdm import tqdm

from pypctta.aggregation.config import TtaConfig
from pypctta.aggregation.main import combine_features, combine_point_logits
from pypctta.augmentation.main import make_augmentations
from pypctta.augmentation.params import AugmentationMethod
from pypctta.common.sampling import farthest_point_sample
from pypctta.exceptions import DimensionMismatch, EmptyInput, IoError, UsageError
from pypctta.io.labels import read_labels
from pypctta.io.manifest import DatasetManifest, ManifestEntry
from pypctta.io.mesh import read_mesh
from pypctta.io.point_cloud import read_point_cloud
from pypctta.plot_utils import instantiate_axes_row
from pypctta.predictor.common import _BasePredictor
from pypctta.results.metrics import (
    ConfusionMatrix,
    PartInstance,
    mean_class_accuracy,
    mean_iou,
    overall_accuracy,
    part_iou,
)
from pypctta.results.result_definitions import MetricDefinitions
from pypctta.utils import map_ordered

STAGES = ("augment", "inference", "aggregation", "other")


class StageTimer:
    """Accumulates wall-clock seconds per pipeline stage."""

    def __init__(self) -> None:
        self._seconds: Dict[str, float] = {stage: 0.0 for stage in STAGES}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self._seconds[name] += time.perf_counter() - start

    def merge(self, other: StageTimer) -> None:
        for name, seconds in other.seconds.items():
            self._seconds[name] += seconds

    @property
    def seconds(self) -> Dict[str, float]:
        return dict(self._seconds)


@dataclass(frozen=True, eq=False)
class EntryPrediction:
    """
    Baseline and TTA predictions of one manifest entry.

    *Not meant to be instantiated by the user.*
    """

    index: int
    """Position of the entry in the manifest."""
    cloud: str
    """File name of the entry's point cloud."""
    class_id: int
    """The ground-truth class, or the category for part segmentation."""
    baseline: NDArray[np.int64]
    """Baseline labels: one class label, or one part label per point."""
    tta: NDArray[np.int64]
    """TTA labels, shaped like `baseline`."""
    ground_truth: NDArray[np.int64]
    """Ground-truth labels, shaped like `baseline`."""

    def to_dict(self, task: str) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "index": self.index,
            "cloud": self.cloud,
            "class": self.class_id,
        }
        if task == "classification":
            record["baseline"] = int(self.baseline[0])
            record["tta"] = int(self.tta[0])
        else:
            record["baseline"] = self.baseline.tolist()
            record["tta"] = self.tta.tolist()
        return record


@dataclass(frozen=True)
class DensityRow:
    """Baseline and TTA metrics after subsampling every cloud to `density` points."""

    density: int
    baseline: Dict[str, float]
    tta: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return {"density": self.density, "baseline": self.baseline, "tta": self.tta}


def compute_metrics(
    task: str,
    predictions: Sequence[EntryPrediction],
    n_classes: int,
    part_sets: Dict[int, Tuple[int, ...]] | None = None,
) -> Tuple[Dict[str, float], Dict[str, float]]:
    """
    Computes the baseline and TTA metric blocks of a task from entry predictions.

    Classification reports oAcc and mAcc over `n_classes` classes; part
    segmentation reports mIoU over all part labels and the instance and category
    mean IoU.

    Raises
    ------
    EmptyInput
        If there are no predictions.
    """
    if len(predictions) == 0:
        raise EmptyInput("Cannot compute metrics without predictions.")
    blocks = []
    for attribute in ("baseline", "tta"):
        gt = np.concatenate([p.ground_truth for p in predictions])
        pred = np.concatenate([getattr(p, attribute) for p in predictions])
        cm = ConfusionMatrix.from_labels(gt, pred, n_classes)
        if task == "classification":
            blocks.append(
                {"oAcc": overall_accuracy(cm), "mAcc": mean_class_accuracy(cm)}
            )
            continue
        sets = part_sets or {}
        instances = [
            PartInstance(
                p.ground_truth, getattr(p, attribute), p.class_id, sets[p.class_id]
            )
            for p in predictions
        ]
        ins_iou, cat_iou = part_iou(instances)
        blocks.append({"mIoU": mean_iou(cm), "mInsIoU": ins_iou, "mCatIoU": cat_iou})
    return blocks[0], blocks[1]


class EvaluationReport:
    """
    Result of a dataset evaluation: per-entry predictions, baseline and TTA metrics,
    optional metrics per subsampling density and per-stage timings.

    *Not meant to be instantiated by the user.* Returned by `evaluate_dataset`.
    """

    def __init__(
        self,
        task: str,
        n_classes: int,
        config: Dict[str, Any],
        entries: Sequence[EntryPrediction],
        densities: Sequence[DensityRow] = (),
        timings: Dict[str, float] | None = None,
        split: str | None = None,
        part_sets: Dict[int, Tuple[int, ...]] | None = None,
    ):
        self._task = task
        self._n_classes = n_classes
        self._config = dict(config)
        self._entries = list(entries)
        self._densities = list(densities)
        self._timings = dict(timings or {})
        self._split = split
        self._part_sets = dict(part_sets or {})
        self._baseline, self._tta = compute_metrics(
            task, self._entries, n_classes, self._part_sets
        )

    @property
    def task(self) -> str:
        return self._task

    @property
    def split(self) -> str | None:
        return self._split

    @property
    def config(self) -> Dict[str, Any]:
        return self._config

    @property
    def entries(self) -> List[EntryPrediction]:
        return self._entries

    @property
    def baseline(self) -> Dict[str, float]:
        """Metrics of the predictions without augmentation."""
        return self._baseline

    @property
    def tta(self) -> Dict[str, float]:
        """Metrics of the TTA predictions."""
        return self._tta

    @property
    def densities(self) -> List[DensityRow]:
        return self._densities

    @property
    def timings(self) -> Dict[str, float]:
        """Seconds per stage summed over entries, and the wall-clock total."""
        return self._timings

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        """
        JSON-serializable report. Without timings, two runs with the same inputs
        and seed give identical dictionaries.
        """
        report: Dict[str, Any] = {
            "task": self._task,
            "split": self._split,
            "n_entries": len(self._entries),
            "config": self._config,
            "metrics": {"baseline": self._baseline, "tta": self._tta},
            "densities": [row.to_dict() for row in self._densities],
            "entries": [entry.to_dict(self._task) for entry in self._entries],
        }
        if include_timings:
            report["timings"] = self._timings
        return report

    def to_json(
        self, path: str | Path | None = None, include_timings: bool = True
    ) -> str:
        """
        Serializes the report; writes it to `path` when given.

        Raises
        ------
        IoError
            If the file cannot be written.
        """
        text = json.dumps(self.to_dict(include_timings), indent=2) + "\n"
        if path is not None:
            try:
                Path(path).write_text(text)
            except OSError as error:
                raise IoError(f"Cannot write report to {path}: {error}") from error
        return text

    def to_pandas(self) -> pd.DataFrame:
        """
        The metrics as a table with one row per density (the full clouds first) and
        the columns (metric, 'baseline' | 'tta').
        """
        rows = [("full", self._baseline, self._tta)] + [
            (row.density, row.baseline, row.tta) for row in self._densities
        ]
        records = []
        for density, baseline, tta in rows:
            for metric in baseline:
                records.append(
                    dict(
                        density=density,
                        metric=metric,
                        baseline=baseline[metric],
                        tta=tta[metric],
                    )
                )
        return pd.DataFrame.from_records(records)

    def plot_density_sweep(
        self,
        axes: Sequence[Axes] | None = None,
        figsize: Tuple[float, float] | None = None,
        **kwargs: Any,
    ) -> List[Axes]:
        """
        Plots baseline and TTA metrics against the subsampling density, one axes per
        metric of the task.

        Parameters
        ----------
        axes:
            Optional existing axes, one per metric.
        figsize:
            Size of a new figure.
        **kwargs:
            Passed to the `pyplot.subplots()` call.

        Raises
        ------
        ValueError
            If the report has no density rows.
        """
        if not self._densities:
            raise ValueError("The report holds no density sweep.")
        metrics = MetricDefinitions.for_task(self._task)
        axes_row = instantiate_axes_row(
            len(metrics), figsize=figsize, axes=axes, **kwargs
        )
        densities = [row.density for row in self._densities]
        for ax, metric in zip(axes_row, metrics):
            name = metric.value.name
            baseline = [row.baseline[name] for row in self._densities]
            tta = [row.tta[name] for row in self._densities]
            ax.plot(densities, baseline, "o-", label="baseline")
            ax.plot(densities, tta, "s-", label="TTA")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("points per cloud")
            ax.set_ylabel(f"{metric.value.label} [{metric.value.unit}]")
            ax.set_title(name)
            ax.grid()
            ax.legend()
        return axes_row


def _masked_argmax(
    logits: NDArray[np.float64], parts: Tuple[int, ...]
) -> NDArray[np.int64]:
    columns = np.asarray(parts, dtype=np.int64)
    return columns[np.argmax(logits[:, columns], axis=1)]


def _predict_entry(
    index: int,
    entry: ManifestEntry,
    manifest: DatasetManifest,
    model: _BasePredictor,
    config: TtaConfig,
    density: int | None,
    timer: StageTimer,
    reuse: EntryPrediction | None = None,
) -> EntryPrediction:
    with timer.stage("other"):
        cloud = read_point_cloud(entry.cloud)
        ground_truth = np.asarray([entry.class_id], dtype=np.int64)
        if manifest.task == "part_segmentation":
            ground_truth = read_labels(entry.labels)  # type: ignore[arg-type]
            if ground_truth.shape[0] != cloud.n_points:
                raise DimensionMismatch(
                    f"{entry.labels} holds {ground_truth.shape[0]} labels for "
                    f"{cloud.n_points} points."
                )
        if density is not None and density < cloud.n_points:
            selected = farthest_point_sample(cloud, density, start=0)
            cloud = cloud.select(selected)
            if manifest.task == "part_segmentation":
                ground_truth = ground_truth[selected]
        elif reuse is not None:
            # the cloud is used unchanged, so the full-cloud prediction holds
            return reuse
        mesh = None
        if config.method is AugmentationMethod.MeshSurface:
            mesh = read_mesh(entry.mesh)  # type: ignore[arg-type]

    with timer.stage("augment"):
        augmentation_set = make_augmentations(cloud, config, mesh=mesh, threads=1)
    clouds = augmentation_set.clouds

    if manifest.task == "classification":
        with timer.stage("inference"):
            features = [model.extract_global_feature(c) for c in clouds]
        with timer.stage("aggregation"):
            result = combine_features(model, features)
        baseline = np.asarray([result.baseline_label], dtype=np.int64)
        tta = np.asarray([result.label], dtype=np.int64)
    else:
        parts = manifest.part_sets[entry.class_id]
        with timer.stage("inference"):
            logits = [model.per_point_logits(c) for c in clouds]
        with timer.stage("aggregation"):
            segmentation = combine_point_logits(clouds, logits, config, threads=1)
        baseline = _masked_argmax(logits[0].values, parts)
        tta = _masked_argmax(segmentation.logits, parts)

    return EntryPrediction(
        index=index,
        cloud=entry.cloud.name,
        class_id=entry.class_id,
        baseline=baseline,
        tta=tta,
        ground_truth=ground_truth,
    )


def _check_compatibility(
    manifest: DatasetManifest,
    model: _BasePredictor,
    config: TtaConfig,
    entries: List[ManifestEntry],
) -> None:
    if manifest.task == "classification":
        if model.n_classes != manifest.n_classes:
            raise DimensionMismatch(
                f"The model predicts {model.n_classes} classes, the manifest declares "
                f"{manifest.n_classes}."
            )
    else:
        if not model.supports_segmentation:
            raise UsageError(
                "A part segmentation manifest needs a model with a segmentation head."
            )
        if model.n_classes < manifest.n_parts:
            raise DimensionMismatch(
                f"The model predicts {model.n_classes} classes, the manifest uses "
                f"{manifest.n_parts} part labels."
            )
    if config.method is AugmentationMethod.MeshSurface:
        missing = [str(entry.cloud) for entry in entries if entry.mesh is None]
        if missing:
            raise UsageError(
                f"The mesh method needs a mesh for every entry; missing for {missing}."
            )


def evaluate_dataset(
    manifest: DatasetManifest,
    model: _BasePredictor,
    config: TtaConfig,
    split: str | None = None,
    densities: Sequence[int] | None = None,
    threads: int | None = None,
    verbose: bool = False,
) -> EvaluationReport:
    """
    Evaluates baseline and TTA predictions over the entries of a manifest.

    Every entry is predicted without augmentation (row 0 of the TTA run) and with
    the configured TTA. Part predictions are restricted to the part set of the
    entry's category. With `densities`, every cloud (and its labels) is first
    subsampled by farthest point sampling from index 0 to each density, and the
    metrics are reported per density. Clouds with at most `density` points are used
    unchanged and keep their full-cloud predictions.

    Parameters
    ----------
    manifest:
        The dataset.
    model:
        The predictor; for part segmentation it needs a segmentation head.
    config:
        The TTA configuration.
    split:
        Evaluate only the entries of this split; None evaluates all entries.
    densities:
        Optional point counts of the density sweep.
    threads:
        Entries are evaluated concurrently on this many workers; None reads
        ``PCTTA_THREADS``. The report, timings excluded, does not depend on it.
    verbose:
        If True, log the stages and show a progress bar.

    Returns
    -------
    EvaluationReport

    Raises
    ------
    EmptyInput
        If the split holds no entries.
    UsageError
        If the model or method does not fit the manifest.
    DimensionMismatch
        If class counts or label lengths do not match.
    """
    entries = manifest.select(split)
    if not entries:
        raise EmptyInput(f"The manifest holds no entries for split '{split}'.")
    for density in densities or ():
        if isinstance(density, bool) or not isinstance(density, int) or density < 1:
            raise ValueError(
                f"Densities must be positive integers, but got {density!r}."
            )
    _check_compatibility(manifest, model, config, entries)

    n_classes = (
        manifest.n_classes if manifest.task == "classification" else model.n_classes
    )
    indices = {id(entry): i for i, entry in enumerate(manifest.entries)}
    total = StageTimer()
    start = time.perf_counter()

    def run(
        density: int | None, full: Sequence[EntryPrediction] = ()
    ) -> List[EntryPrediction]:
        if verbose:
            label = "full clouds" if density is None else f"{density} points"
            logging.info(f"Evaluating {len(entries)} entries on {label}.")
        pbar = tqdm(total=len(entries)) if verbose else None

        def task(position: int) -> Tuple[EntryPrediction, StageTimer]:
            entry = entries[position]
            timer = StageTimer()
            prediction = _predict_entry(
                indices[id(entry)],
                entry,
                manifest,
                model,
                config,
                density,
                timer,
                reuse=full[position] if full else None,
            )
            if pbar:
                pbar.update()
                pbar.set_description(f"Evaluate {entry.cloud.name}")
            return prediction, timer

        results = map_ordered(task, range(len(entries)), threads)
        if pbar:
            pbar.close()
        for _, timer in results:
            total.merge(timer)
        return [prediction for prediction, _ in results]

    predictions = run(None)
    rows = []
    for density in densities or ():
        baseline, tta = compute_metrics(
            manifest.task, run(density, predictions), n_classes, manifest.part_sets
        )
        rows.append(DensityRow(density=density, baseline=baseline, tta=tta))

    timings = total.seconds
    timings["total"] = time.perf_counter() - start
    return EvaluationReport(
        task=manifest.task,
        n_classes=n_classes,
        config=config.to_dict(),
        entries=predictions,
        densities=rows,
        timings=timings,
        split=split,
        part_sets=manifest.part_sets,
    )
