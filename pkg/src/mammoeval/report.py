"""Results documents, curve export, and the cross-run scoreboard.

A results document is a JSON file named
``<model>__<variant>__<dataset>__seed<seed>.<sha12>.results.json`` where
``sha12`` is the start of the SHA-256 of the file's own bytes. Its keys::

    schema            "mammoeval-results/1"
    harness_version   package version that wrote it
    model, variant    registry identifiers (variant may be null)
    column            scoreboard column label
    dataset           dataset name
    granularity       "image-level" | "breast-level"
    master_seed       bootstrap seed
    config            n_replicates, confidence, max_redraws, skip_budget
    manifest          path (relative to the document), metadata_sha256,
                      output_sha256
    metrics           list of metric results (metric, level, point, ci_low,
                      ci_high, curve, counts)
    exclusions        {"count": n, "entries": [...]}
    warnings          list of strings
    notes             free-text footnotes carried to the scoreboard

Timestamps live only in the manifest, so repeated deterministic runs give
byte-identical results documents.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from mammoeval import __version__
from mammoeval.metrics import AUC_PR, AUC_ROC, EvaluationConfig, MetricResult
from mammoeval.registry import ModelDescriptor
from mammoeval.runner import RunManifest, atomic_write_text, read_manifest, write_manifest

SCHEMA = "mammoeval-results/1"
DATASET_ORDER = ("NYU Reader Study", "NYU Test Set", "INbreast", "DDSM", "CMMD", "OPTIMAM", "CSAW-CC")
MODEL_ORDER = ("end2end", "faster_rcnn", "dmv_cnn", "gmic", "glam")
STATIC_TIMESTAMP = "2022-01-01T00:00:00.000000+00:00"
_METRIC_ROWS = ((AUC_ROC, "ROC"), (AUC_PR, "PR"))


@dataclass
class ResultsDocument:
    model: str
    variant: str | None
    column: str
    dataset: str
    granularity: str
    master_seed: int
    config: dict
    manifest: dict
    metrics: list[MetricResult]
    exclusions: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    harness_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "harness_version": self.harness_version,
            "model": self.model,
            "variant": self.variant,
            "column": self.column,
            "dataset": self.dataset,
            "granularity": self.granularity,
            "master_seed": self.master_seed,
            "config": self.config,
            "manifest": self.manifest,
            "metrics": [m.to_dict() for m in self.metrics],
            "exclusions": {"count": len(self.exclusions), "entries": list(self.exclusions)},
            "warnings": list(self.warnings),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ResultsDocument:
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported results schema {d.get('schema')!r}")
        return cls(
            model=d["model"],
            variant=d["variant"],
            column=d["column"],
            dataset=d["dataset"],
            granularity=d["granularity"],
            master_seed=d["master_seed"],
            config=d["config"],
            manifest=d["manifest"],
            metrics=[MetricResult.from_dict(m) for m in d["metrics"]],
            exclusions=list(d["exclusions"]["entries"]),
            warnings=list(d.get("warnings", [])),
            notes=list(d.get("notes", [])),
            harness_version=d["harness_version"],
        )

    def to_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")

    def metric(self, metric: str, level: str = "breast") -> MetricResult | None:
        for m in self.metrics:
            if m.metric == metric and m.level == level:
                return m
        return None

    @property
    def stem(self) -> str:
        return result_stem(self.model, self.variant, self.dataset, self.master_seed)


def slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", text).strip("-") or "x"


def result_stem(model: str, variant: str | None, dataset: str, seed: int) -> str:
    return f"{slug(model)}__{slug(variant or 'default')}__{slug(dataset)}__seed{seed}"


def config_dict(config: EvaluationConfig) -> dict:
    d = asdict(config)
    d.pop("master_seed")
    return d


def write_results(results_dir: Path | str, doc: ResultsDocument) -> Path:
    """Write ``doc`` under its content-addressed name, replacing older versions."""
    results_dir = Path(results_dir)
    results_dir.mkdir(parents=True, exist_ok=True)
    data = doc.to_bytes()
    path = results_dir / f"{doc.stem}.{hashlib.sha256(data).hexdigest()[:12]}.results.json"
    for old in results_dir.glob(f"{doc.stem}.*.results.json"):
        if old != path:
            old.unlink()
    atomic_write_text(path, data.decode("utf-8"))
    return path


def load_results(path: Path | str) -> ResultsDocument:
    return ResultsDocument.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_curve_csv(path: Path | str, points, header: tuple[str, str]) -> None:
    lines = [",".join(header)] + [f"{x!r},{y!r}" for x, y in points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def plot_curve(path: Path | str, result: MetricResult, title: str) -> None:
    """Static SVG of a ROC or PR curve."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [p[0] for p in result.curve]
    ys = [p[1] for p in result.curve]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if result.metric == AUC_ROC:
        ax.plot(xs, ys, lw=1.5)
        ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="grey")
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
    else:
        ax.step(xs, ys, where="post", lw=1.5)
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title(f"{title}\n{result.metric} {result.format()}", fontsize=9)
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "mammoeval"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def export_curves(curve_dir: Path | str, stem: str, doc: ResultsDocument, plots: bool = True) -> list[Path]:
    curve_dir = Path(curve_dir)
    curve_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for m in doc.metrics:
        base = f"{stem}__{m.level}__{m.metric}"
        header = ("fpr", "tpr") if m.metric == AUC_ROC else ("recall", "precision")
        write_curve_csv(curve_dir / f"{base}.csv", m.curve, header)
        written.append(curve_dir / f"{base}.csv")
        if plots:
            plot_curve(curve_dir / f"{base}.svg", m, f"{doc.column} on {doc.dataset} ({m.level} level)")
            written.append(curve_dir / f"{base}.svg")
    return written


# -- scoreboard ---------------------------------------------------------------

@dataclass
class _Entry:
    path: Path
    doc: ResultsDocument
    finished_at: str


def _finished_at(path: Path, doc: ResultsDocument) -> str:
    ref = doc.manifest.get("path")
    if ref:
        try:
            return read_manifest(path.parent / ref).finished_at
        except (OSError, ValueError, KeyError, TypeError):
            pass
    return ""


def registry_columns(registry: list[ModelDescriptor]) -> list[tuple[str, str | None, str]]:
    """(model, variant, label) per column: published model order, then the rest by name.

    Variants stay next to each other in descriptor order.
    """
    rank = {m: i for i, m in enumerate(MODEL_ORDER)}
    ordered = sorted(registry, key=lambda d: (rank.get(d.name, len(rank)), d.name))
    return [(d.name, v, d.column_label(v)) for d in ordered for v in d.variant_names()]


def build_scoreboard(results_dir: Path | str, registry: list[ModelDescriptor]) -> str:
    """Markdown table of breast-level AUCs, one column per model variant.

    When several documents exist for the same (model, variant, dataset), the
    one whose manifest finished last wins and the others are footnoted.
    """
    results_dir = Path(results_dir)
    entries = []
    if results_dir.is_dir():
        for p in sorted(results_dir.rglob("*.results.json")):
            doc = load_results(p)
            entries.append(_Entry(p, doc, _finished_at(p, doc)))

    columns = registry_columns(registry)
    known = {(m, v) for m, v, _ in columns}
    extra = sorted({(e.doc.model, e.doc.variant, e.doc.column) for e in entries
                    if (e.doc.model, e.doc.variant) not in known}, key=lambda c: (c[0], c[1] or ""))
    columns += extra

    chosen: dict[tuple, _Entry] = {}
    superseded: list[tuple[_Entry, _Entry]] = []
    for e in sorted(entries, key=lambda e: (e.finished_at, e.path.name)):
        key = (e.doc.model, e.doc.variant, e.doc.dataset)
        if key in chosen:
            superseded.append((chosen[key], e))
        chosen[key] = e

    datasets = {k[2] for k in chosen}
    ordered = [d for d in DATASET_ORDER if d in datasets] + sorted(datasets - set(DATASET_ORDER))

    labels = [c[2] for c in columns]
    lines = [
        "# Scoreboard",
        "",
        "Breast-level AUC with 95% bootstrap confidence intervals.",
        "",
        "| Data set | AUC | " + " | ".join(labels) + " |",
        "|" + " --- |" * (len(labels) + 2),
    ]
    for ds in ordered:
        for metric, short in _METRIC_ROWS:
            cells = []
            for model, variant, _ in columns:
                e = chosen.get((model, variant, ds))
                m = e.doc.metric(metric, "breast") if e else None
                cells.append(m.format() if m else "N/A")
            lines.append(f"| {ds} | {short} | " + " | ".join(cells) + " |")

    notes = []
    for e in (chosen[k] for k in sorted(chosen, key=lambda k: (k[0], k[1] or "", k[2]))):
        for n in e.doc.notes:
            if n not in notes:
                notes.append(n)
    for old, new in superseded:
        notes.append(
            f"{old.doc.column} on {old.doc.dataset}: {old.path.name} (seed {old.doc.master_seed}, "
            f"finished {old.finished_at or 'unknown'}) superseded by {new.path.name} "
            f"(seed {new.doc.master_seed}, finished {new.finished_at or 'unknown'})"
        )
    if notes:
        lines.append("")
        lines += [f"{i}. {n}" for i, n in enumerate(notes, 1)]
    return "\n".join(lines) + "\n"


def write_scoreboard(results_dir: Path | str, registry: list[ModelDescriptor], out: Path | str) -> Path:
    out = Path(out)
    atomic_write_text(out, build_scoreboard(results_dir, registry))
    return out


# -- published reference values ----------------------------------------------

PUBLISHED_NOTES = {
    "NYU Reader Study": [
        "NYU Reader Study radiologists (14 readers): ROC 0.705-0.860 (mean 0.778), PR 0.244-0.453 (mean 0.364).",
    ],
    "DDSM": ["Faster R-CNN was trained on the full DDSM data set and is not evaluated on it."],
}
PUBLISHED_CELL_NOTES = {
    ("CMMD", "GMIC (single)"): "GMIC on CMMD: one study (#D1-0951) excluded after a pre-processing failure.",
    ("CMMD", "GMIC (top-5 ensemble)"): "GMIC on CMMD: one study (#D1-0951) excluded after a pre-processing failure.",
}


def published_rows() -> list[dict]:
    with (resources.files("mammoeval") / "data" / "published.csv").open(encoding="utf-8") as f:
        return list(csv.DictReader(f))


def ingest_published(results_dir: Path | str, registry: list[ModelDescriptor]) -> list[Path]:
    """Write the published breast-level results as static results documents."""
    results_dir = Path(results_dir)
    by_label = {label: (m, v) for m, v, label in registry_columns(registry)}
    cells: dict[tuple[str, str], list[MetricResult]] = {}
    for row in published_rows():
        metric = AUC_ROC if row["auc"] == "ROC" else AUC_PR
        cells.setdefault((row["column"], row["dataset"]), []).append(MetricResult(
            metric=metric, level="breast", point=float(row["point"]),
            ci_low=float(row["ci_low"]), ci_high=float(row["ci_high"]),
            n_replicates=2000, confidence=0.95,
        ))
    written = []
    manifest_dir = results_dir / "manifests"
    for (column, dataset), metrics in cells.items():
        model, variant = by_label[column]
        stem = result_stem(model, variant, dataset, 0)
        manifest = RunManifest(
            model=model, variant=variant, dataset=dataset, device="gpu", backend="published",
            started_at=STATIC_TIMESTAMP, finished_at=STATIC_TIMESTAMP, exit_status=0,
            metadata_sha256="", output_sha256=None, master_seed=0,
        )
        write_manifest(manifest_dir / f"{stem}.manifest.json", manifest)
        notes = list(PUBLISHED_NOTES.get(dataset, []))
        if (dataset, column) in PUBLISHED_CELL_NOTES:
            notes.append(PUBLISHED_CELL_NOTES[(dataset, column)])
        doc = ResultsDocument(
            model=model, variant=variant, column=column, dataset=dataset, granularity="breast-level",
            master_seed=0, config={"n_replicates": 2000, "confidence": 0.95},
            manifest={"path": f"manifests/{stem}.manifest.json", "metadata_sha256": "", "output_sha256": None},
            metrics=sorted(metrics, key=lambda m: m.metric != AUC_ROC), notes=notes,
        )
        written.append(write_results(results_dir, doc))
    return written
