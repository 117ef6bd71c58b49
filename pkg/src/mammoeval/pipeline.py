"""End-to-end flows behind ``mammoeval run`` and ``mammoeval score``.

Output directory layout::

    <output_dir>/runs/<stem>/model_output/predictions.csv
    <output_dir>/runs/<stem>/model.log
    <output_dir>/runs/<stem>/manifest.json
    <output_dir>/results/<stem>.<sha12>.results.json
    <output_dir>/curves/<stem>__<level>__<metric>.{csv,svg}
"""

from __future__ import annotations

import logging
from pathlib import Path

from mammoeval.core import VIEW_ORDER, Dataset, parse_metadata, validate_dataset
from mammoeval.errors import ValidationFailed
from mammoeval.metrics import EvaluationConfig, evaluate
from mammoeval.predictions import PredictionSet, load_predictions
from mammoeval.registry import default_registry_dir, find, load_registry, resolve_invocation
from mammoeval.report import ResultsDocument, config_dict, export_curves, result_stem, write_results
from mammoeval.runner import RunManifest, run_model, sha256_file, utc_now, write_manifest

log = logging.getLogger(__name__)


def score_predictions(preds: PredictionSet, config: EvaluationConfig, n_jobs: int = 1) -> list:
    """Breast-level metrics always; image-level too when image scores exist."""
    results = evaluate([b.score for b in preds.breasts], [b.label for b in preds.breasts], "breast", config, n_jobs)
    if preds.images is not None:
        results += evaluate([p.malignant_pred for p in preds.images], [p.malignant_label for p in preds.images],
                            "image", config, n_jobs)
    return results


def _finish(output_dir: Path, doc: ResultsDocument, plots: bool) -> tuple[ResultsDocument, Path]:
    path = write_results(output_dir / "results", doc)
    export_curves(output_dir / "curves", doc.stem, doc, plots=plots)
    log.info("wrote %s", path)
    return doc, path


def run(model: str, *, image_dir: Path | str, metadata: Path | str, output_dir: Path | str,
        variant: str | None = None, device: str = "cpu", backend: str = "container",
        overrides: dict[str, str] | None = None, config: EvaluationConfig | None = None,
        registry_dir: Path | str | None = None, dataset_name: str | None = None,
        timeout: float | None = None, n_jobs: int = 1, plots: bool = True) -> tuple[ResultsDocument, Path]:
    """validate -> run model -> parse -> aggregate -> metrics -> write."""
    config = config or EvaluationConfig()
    output_dir = Path(output_dir)
    metadata = Path(metadata)
    dataset = parse_metadata(metadata, image_root=image_dir, name=dataset_name)

    report = validate_dataset(dataset)
    for issue in report.warnings:
        log.warning(issue.message)
    if report.fatal:
        raise ValidationFailed(report.format())

    registry = load_registry(registry_dir or default_registry_dir())
    desc = find(registry, model)
    variant = variant or desc.default_variant
    if desc.needs_four_views(variant):
        partial = [e.exam_id for e in dataset.exams if any(not e.views[v] for v in VIEW_ORDER)]
        if partial:
            raise ValidationFailed(
                f"model {model!r} variant {variant!r} needs all four views; exams {partial[:10]} lack some"
            )

    stem = result_stem(desc.name, variant, dataset.name, config.master_seed)
    run_dir = output_dir / "runs" / stem
    inv = resolve_invocation(desc, variant, overrides, device=device, paths={
        "image_dir": Path(image_dir).resolve(),
        "metadata": metadata.resolve(),
        "output": (run_dir / "model_output" / "predictions.csv").resolve(),
    })
    out_csv, manifest = run_model(inv, backend, timeout, run_dir=run_dir, dataset_name=dataset.name,
                                  master_seed=config.master_seed)
    preds = load_predictions(out_csv, dataset, desc.granularity)
    doc = ResultsDocument(
        model=desc.name, variant=variant, column=desc.column_label(variant), dataset=dataset.name,
        granularity=desc.granularity, master_seed=config.master_seed, config=config_dict(config),
        manifest={"path": f"../runs/{stem}/manifest.json", "metadata_sha256": manifest.metadata_sha256,
                  "output_sha256": manifest.output_sha256},
        metrics=score_predictions(preds, config, n_jobs),
        exclusions=preds.exclusions, warnings=preds.warnings,
    )
    return _finish(output_dir, doc, plots)


def score(predictions: Path | str, *, metadata: Path | str, granularity: str, output_dir: Path | str,
          config: EvaluationConfig | None = None, image_dir: Path | str | None = None,
          model: str = "external", variant: str | None = None, dataset_name: str | None = None,
          n_jobs: int = 1, plots: bool = True) -> tuple[ResultsDocument, Path]:
    """Score an existing prediction CSV with the same metric path as :func:`run`."""
    config = config or EvaluationConfig()
    output_dir = Path(output_dir)
    dataset: Dataset = parse_metadata(metadata, image_root=image_dir, name=dataset_name)
    preds = load_predictions(predictions, dataset, granularity)
    metrics = score_predictions(preds, config, n_jobs)

    stem = result_stem(model, variant, dataset.name, config.master_seed)
    now = utc_now()
    manifest = RunManifest(
        model=model, variant=variant, dataset=dataset.name, device="none", backend="none",
        started_at=now, finished_at=now, exit_status=None,
        metadata_sha256=sha256_file(metadata), output_sha256=sha256_file(predictions),
        master_seed=config.master_seed,
    )
    write_manifest(output_dir / "runs" / stem / "manifest.json", manifest)
    doc = ResultsDocument(
        model=model, variant=variant, column=model if variant is None else f"{model} ({variant})",
        dataset=dataset.name, granularity=granularity, master_seed=config.master_seed,
        config=config_dict(config),
        manifest={"path": f"../runs/{stem}/manifest.json", "metadata_sha256": manifest.metadata_sha256,
                  "output_sha256": manifest.output_sha256},
        metrics=metrics, exclusions=preds.exclusions, warnings=preds.warnings,
    )
    return _finish(output_dir, doc, plots)
