from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Sequence

import numpy as np
from matplotlib import pyplot as plt

from pypctta._version import __version__
from pypctta.aggregation.config import TtaConfig
from pypctta.aggregation.main import combine_features, combine_point_logits
from pypctta.augmentation.main import make_augmentations
from pypctta.augmentation.params import AugmentationMethod, JitterParams, UpsampleParams
from pypctta.exceptions import PcttaError, UsageError
from pypctta.io.labels import write_labels
from pypctta.io.manifest import read_manifest
from pypctta.io.mesh import read_mesh
from pypctta.io.point_cloud import read_point_cloud, write_point_cloud
from pypctta.predictor import load_model
from pypctta.predictor.centroid import DEFAULT_BINS, fit_centroid_classifier
from pypctta.results.evaluation import StageTimer, evaluate_dataset
from pypctta.synth import generate_dataset

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_USAGE = 64

TTA_CHOICES = ("none", "copy", "jitter", "upsample", "mesh")
TASK_CHOICES = ("classification", "part_segmentation")


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises `UsageError` instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {value}")
    return value


def _target(text: str) -> int | None:
    if text == "same":
        return None
    return _positive_int(text)


def _densities(text: str) -> List[int]:
    return [_positive_int(token.strip()) for token in text.split(",") if token.strip()]


def _add_augmentation_arguments(
    parser: argparse.ArgumentParser, tta_flag: bool
) -> None:
    if tta_flag:
        parser.add_argument("--tta", choices=TTA_CHOICES, default="upsample")
    else:
        parser.add_argument(
            "--method", choices=TTA_CHOICES[1:], default="upsample", dest="tta"
        )
    parser.add_argument("--samples", type=_non_negative_int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sigma", type=float, default=0.05)
    parser.add_argument("--scale-r", type=float, default=4.0, dest="scale_r")
    parser.add_argument(
        "--mesh-oversample", type=_positive_int, default=2, dest="mesh_oversample"
    )
    parser.add_argument("--target", type=_target, default=None, metavar="same|N")
    parser.add_argument("--threads", type=_non_negative_int, default=None)


def _add_segmentation_arguments(parser: argparse.ArgumentParser, default: bool) -> None:
    parser.add_argument(
        "--feat",
        choices=("xyz", "xyz+logit"),
        default="xyz+logit" if default else None,
    )
    parser.add_argument(
        "--agg", choices=("max", "avg"), default="avg" if default else None
    )
    parser.add_argument("--k", type=_positive_int, default=1 if default else None)
    parser.add_argument("--logit-weight", type=float, default=None, dest="logit_weight")
    parser.add_argument(
        "--prob",
        action="store_true",
        help="aggregate softmax probabilities instead of logits",
    )


def _config(args: argparse.Namespace) -> TtaConfig:
    method = "copy" if args.tta == "none" else args.tta
    samples = 0 if args.tta == "none" else args.samples
    options: Dict[str, Any] = {}
    flags = (("feat", "feature_mode"), ("agg", "agg_mode"), ("k", "neighbor_k"))
    for flag, name in flags:
        if getattr(args, flag, None) is not None:
            options[name] = getattr(args, flag)
    if getattr(args, "logit_weight", None) is not None:
        options["logit_weight"] = args.logit_weight
    try:
        return TtaConfig(
            method=AugmentationMethod.get(method),
            samples_m=samples,
            master_seed=args.seed,
            target_count=args.target,
            jitter=JitterParams(sigma=args.sigma),
            upsample=UpsampleParams(scale_r=args.scale_r),
            mesh_oversample=args.mesh_oversample,
            use_probabilities=bool(getattr(args, "prob", False)),
            **options,
        )
    except (TypeError, ValueError) as error:
        raise UsageError(str(error)) from error


def _mesh(args: argparse.Namespace, config: TtaConfig) -> Any:
    if config.method is not AugmentationMethod.MeshSurface or config.samples_m == 0:
        return None
    if args.mesh is None:
        raise UsageError("--method mesh requires --mesh")
    return read_mesh(args.mesh)


def _emit(document: Dict[str, Any], path: str | None) -> None:
    text = json.dumps(document, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def cmd_augment(args: argparse.Namespace) -> int:
    """Writes the augmented clouds and a provenance record to a directory."""
    config = _config(args)
    cloud = read_point_cloud(args.input)
    augmentation_set = make_augmentations(
        cloud,
        config,
        mesh=_mesh(args, config),
        threads=args.threads,
        verbose=args.verbose,
    )
    output = Path(args.output)
    output.mkdir(parents=True, exist_ok=True)
    files = []
    for k, augmented in enumerate(augmentation_set.augmented):
        name = f"aug_{k:03d}.{args.format}"
        write_point_cloud(augmented, output / name, format=args.format)
        files.append(name)
    provenance = augmentation_set.provenance()
    provenance["input"] = str(args.input)
    provenance["files"] = files
    (output / "provenance.json").write_text(json.dumps(provenance, indent=2) + "\n")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    """Prints the TTA and baseline classification of a cloud as JSON."""
    config = _config(args)
    model = load_model(args.model)
    cloud = read_point_cloud(args.input)
    mesh = _mesh(args, config)

    timer = StageTimer()
    with timer.stage("augment"):
        augmentation_set = make_augmentations(
            cloud, config, mesh=mesh, threads=args.threads, verbose=args.verbose
        )
    with timer.stage("inference"):
        features = [model.extract_global_feature(c) for c in augmentation_set.clouds]
    with timer.stage("aggregation"):
        result = combine_features(model, features)

    document = {
        "label": result.label,
        "logits": result.logits[0].tolist(),
        "baseline_label": result.baseline_label,
        "baseline_logits": result.cloud_logits[0].tolist(),
        "config": config.to_dict(),
        "timings": timer.seconds,
    }
    _emit(document, args.output)
    return EXIT_OK


def cmd_segment(args: argparse.Namespace) -> int:
    """Writes per-point TTA labels and prints a JSON summary."""
    config = _config(args)
    model = load_model(args.model)
    if not model.supports_segmentation:
        raise UsageError(f"The model in {args.model} has no segmentation head.")
    cloud = read_point_cloud(args.input)
    mesh = _mesh(args, config)

    timer = StageTimer()
    with timer.stage("augment"):
        augmentation_set = make_augmentations(
            cloud, config, mesh=mesh, threads=args.threads, verbose=args.verbose
        )
    clouds = augmentation_set.clouds
    with timer.stage("inference"):
        logits = [model.per_point_logits(c) for c in clouds]
    with timer.stage("aggregation"):
        result = combine_point_logits(
            clouds, logits, config, threads=args.threads, verbose=args.verbose
        )
    write_labels(result.labels, args.output)

    baseline = logits[0].labels()
    document = {
        "n_points": result.n_points,
        "labels": str(args.output),
        "changed_from_baseline": int(np.sum(baseline != result.labels)),
        "config": config.to_dict(),
        "timings": timer.seconds,
    }
    _emit(document, args.report)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Evaluates baseline and TTA on a manifest and writes the JSON report."""
    manifest = read_manifest(args.manifest)
    if args.task is not None and args.task != manifest.task:
        raise UsageError(
            f"--task {args.task} does not match the manifest task '{manifest.task}'"
        )
    if manifest.task == "classification":
        given = [
            flag
            for flag in ("feat", "agg", "k", "logit_weight")
            if getattr(args, flag) is not None
        ]
        if given or args.prob:
            raise UsageError(
                "segmentation flags do not apply to a classification manifest"
            )
    config = _config(args)
    model = load_model(args.model)
    report = evaluate_dataset(
        manifest,
        model,
        config,
        split=args.split,
        densities=args.density_sweep,
        threads=args.threads,
        verbose=args.verbose,
    )
    if args.output is None:
        print(report.to_json(include_timings=not args.no_timings), end="")
    else:
        report.to_json(args.output, include_timings=not args.no_timings)
    if args.plot is not None:
        axes = report.plot_density_sweep()
        axes[0].figure.savefig(args.plot)
        plt.close(axes[0].figure)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    """Generates the synthetic dataset."""
    classes = [name.strip() for name in args.classes.split(",") if name.strip()]
    if args.noise < 0:
        raise UsageError(f"--noise must be non-negative, got {args.noise}")
    manifest = generate_dataset(
        args.output,
        classes=classes,
        per_class=args.per_class,
        n_points=args.points,
        noise=args.noise,
        seed=args.seed,
        task=args.task,
        verbose=args.verbose,
    )
    print(f"{len(manifest.entries)} clouds written to {args.output}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    """Fits a centroid classifier on a manifest split and stores it as JSON."""
    manifest = read_manifest(args.manifest)
    if manifest.task != "classification":
        raise UsageError("pctta fit needs a classification manifest")
    clouds = [read_point_cloud(entry.cloud) for entry in manifest.select(args.split)]
    labels = [entry.class_id for entry in manifest.select(args.split)]
    model = fit_centroid_classifier(
        list(zip(clouds, labels)), bins=args.bins, n_classes=manifest.n_classes
    )
    model.to_json(args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Returns the `pctta` argument parser."""
    parser = _Parser(prog="pctta", description="Point cloud test-time augmentation.")
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    augment = sub.add_parser("augment", help="write augmented clouds")
    augment.add_argument("-i", "--input", required=True)
    augment.add_argument("-o", "--output", required=True, help="output directory")
    augment.add_argument("--mesh", default=None)
    augment.add_argument("--format", choices=("xyz", "ply"), default="xyz")
    _add_augmentation_arguments(augment, tta_flag=False)
    augment.set_defaults(func=cmd_augment)

    classify = sub.add_parser("classify", help="classify a cloud")
    classify.add_argument("-m", "--model", required=True)
    classify.add_argument("-i", "--input", required=True)
    classify.add_argument(
        "-o", "--output", default=None, help="JSON file, stdout by default"
    )
    classify.add_argument("--mesh", default=None)
    _add_augmentation_arguments(classify, tta_flag=True)
    classify.set_defaults(func=cmd_classify)

    segment = sub.add_parser("segment", help="segment a cloud")
    segment.add_argument("-m", "--model", required=True)
    segment.add_argument("-i", "--input", required=True)
    segment.add_argument("-o", "--output", required=True, help="label file")
    segment.add_argument("--report", default=None, help="JSON file, stdout by default")
    segment.add_argument("--mesh", default=None)
    _add_augmentation_arguments(segment, tta_flag=True)
    _add_segmentation_arguments(segment, default=True)
    segment.set_defaults(func=cmd_segment)

    evaluate = sub.add_parser("eval", help="evaluate a dataset")
    evaluate.add_argument("--manifest", required=True)
    evaluate.add_argument("-m", "--model", required=True)
    evaluate.add_argument(
        "-o", "--output", default=None, help="JSON report, stdout by default"
    )
    evaluate.add_argument("--task", choices=TASK_CHOICES, default=None)
    evaluate.add_argument("--split", choices=("train", "test"), default=None)
    evaluate.add_argument(
        "--density-sweep", type=_densities, default=None, dest="density_sweep"
    )
    evaluate.add_argument("--plot", default=None, help="figure of the density sweep")
    evaluate.add_argument("--no-timings", action="store_true", dest="no_timings")
    _add_augmentation_arguments(evaluate, tta_flag=True)
    _add_segmentation_arguments(evaluate, default=False)
    evaluate.set_defaults(func=cmd_eval)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("-o", "--output", required=True, help="output directory")
    synth.add_argument("--classes", default="sphere,cube,cylinder")
    synth.add_argument("--per-class", type=_positive_int, default=60, dest="per_class")
    synth.add_argument("--points", type=_positive_int, default=2048)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--task", choices=TASK_CHOICES, default="classification")
    synth.set_defaults(func=cmd_synth)

    fit = sub.add_parser("fit", help="fit a centroid classifier")
    fit.add_argument("--manifest", required=True)
    fit.add_argument("-o", "--output", required=True, help="model JSON file")
    fit.add_argument("--split", choices=("train", "test"), default="train")
    fit.add_argument("--bins", type=_positive_int, default=DEFAULT_BINS)
    fit.set_defaults(func=cmd_fit)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Runs the `pctta` command line.

    Returns
    -------
    int
        0 on success, 64 for usage errors, 2 for failures. Errors print one line
        ``pctta: error: <ErrorClass>: <message>`` to stderr.
    """
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as error:
        _report(error)
        return EXIT_USAGE
    except (PcttaError, OSError, ValueError) as error:
        _report(error)
        return EXIT_FAILURE


def _report(error: Exception) -> None:
    message = " ".join(str(error).split())
    print(f"pctta: error: {type(error).__name__}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
