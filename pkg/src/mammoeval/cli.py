"""Command line entry point: ``mammoeval <subcommand>``.

Failures print one line ``mammoeval: error[<family>]: <message>`` to stderr
and exit with the family's code (see :mod:`mammoeval.errors`).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from mammoeval import __version__, pipeline
from mammoeval.core import parse_metadata, validate_dataset
from mammoeval.errors import HarnessError
from mammoeval.images import compute_mean_intensity
from mammoeval.metrics import AUC_ROC, EvaluationConfig
from mammoeval.registry import DEVICES, GRANULARITIES, default_registry_dir, load_registry
from mammoeval.report import write_scoreboard
from mammoeval.runner import BACKENDS


def _param(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, value


def _config(args) -> EvaluationConfig:
    return EvaluationConfig(n_replicates=args.replicates, confidence=args.confidence, master_seed=args.seed,
                            max_redraws=args.max_redraws)


def _add_metric_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="bootstrap master seed")
    p.add_argument("--replicates", type=int, default=2000)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--max-redraws", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1, help="threads for bootstrap replicates")
    p.add_argument("--no-plots", action="store_true", help="skip SVG curve plots")
    p.add_argument("--dataset-name", help="defaults to the metadata file stem")


def _print_summary(doc, path) -> None:
    print(f"{doc.column} on {doc.dataset}")
    for m in doc.metrics:
        label = "AUC ROC" if m.metric == AUC_ROC else "AUC PR"
        print(f"  {m.level:6s} {label:7s} {m.format()}  (n={m.n_samples}, positives={m.n_positives})")
    if doc.exclusions:
        print(f"  {len(doc.exclusions)} breasts excluded")
    print(f"results: {path}")


def cmd_validate(args) -> int:
    dataset = parse_metadata(args.metadata, image_root=args.image_dir)
    report = validate_dataset(dataset)
    print(f"{len(dataset)} exams in {args.metadata}")
    print(report.format())
    if report.fatal:
        return 4
    if args.mean_intensity:
        stats = compute_mean_intensity(dataset, args.source_depth)
        print(f"mean pixel intensity (0-255): {stats.mean_pixel_intensity:.2f} over {stats.pixel_count} pixels")
    return 0


def cmd_run(args) -> int:
    doc, path = pipeline.run(
        args.model, variant=args.variant, image_dir=args.image_dir, metadata=args.metadata,
        output_dir=args.output_dir, device=args.device, backend=args.backend, overrides=dict(args.param),
        config=_config(args), registry_dir=args.registry, dataset_name=args.dataset_name,
        timeout=args.timeout, n_jobs=args.jobs, plots=not args.no_plots,
    )
    _print_summary(doc, path)
    return 0


def cmd_score(args) -> int:
    doc, path = pipeline.score(
        args.predictions, metadata=args.metadata, granularity=args.granularity, output_dir=args.output_dir,
        config=_config(args), image_dir=args.image_dir, model=args.model, variant=args.variant,
        dataset_name=args.dataset_name, n_jobs=args.jobs, plots=not args.no_plots,
    )
    _print_summary(doc, path)
    return 0


def cmd_scoreboard(args) -> int:
    registry = load_registry(args.registry or default_registry_dir())
    out = args.output or Path(args.results_dir) / "scoreboard.md"
    write_scoreboard(args.results_dir, registry, out)
    print(out)
    return 0


def cmd_registry_list(args) -> int:
    for d in load_registry(args.registry or default_registry_dir()):
        variants = ", ".join(
            f"{v}{' (default)' if v == d.default_variant else ''}" for v in d.variants
        ) or "-"
        print(f"{d.name:12s} {d.granularity:13s} {d.container_image:28s} variants: {variants}")
        if d.default_params:
            print(f"{'':12s} defaults: " + ", ".join(f"{k}={v}" for k, v in d.default_params.items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mammoeval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mammoeval {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a metadata file against the image directory")
    p.add_argument("--metadata", required=True)
    p.add_argument("--image-dir", required=True)
    p.add_argument("--mean-intensity", action="store_true", help="also compute the 0-255 mean pixel intensity")
    p.add_argument("--source-depth", type=int, choices=(8, 12, 16))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a registered model and score its predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--variant")
    p.add_argument("--image-dir", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--device", choices=DEVICES, default="cpu")
    p.add_argument("--backend", choices=BACKENDS, default="container")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--registry", help="descriptor directory (default: shipped models)")
    p.add_argument("--timeout", type=float)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score an existing prediction CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--granularity", choices=GRANULARITIES, required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--image-dir")
    p.add_argument("--model", default="external", help="label for the results document")
    p.add_argument("--variant")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("scoreboard", help="render results documents as a markdown table")
    p.add_argument("--results-dir", required=True)
    p.add_argument("--output", help="default: <results-dir>/scoreboard.md")
    p.add_argument("--registry")
    p.set_defaults(func=cmd_scoreboard)

    p = sub.add_parser("registry-list", help="list registered models")
    p.add_argument("--registry")
    p.set_defaults(func=cmd_registry_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HarnessError as e:
        first = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"mammoeval: error[{e.family}]: {type(e).__name__}: {first}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"mammoeval: error[usage]: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
