"""Exam records, datasets and the metadata document codec.

The metadata document is UTF-8 JSON holding a single top-level array of exam
records::

    [
      {
        "L-CC": ["0_L_CC"],
        "R-CC": ["0_R_CC"],
        "L-MLO": ["0_L_MLO"],
        "R-MLO": ["0_R_MLO"],
        "cancer_label": {"left_malignant": 0, "right_malignant": 0},
        "horizontal_flip": "NO"
      }
    ]

Key names are case-sensitive. All six keys are required; view lists may be
empty. The position of a record in the array is its exam id.
"""

from __future__ import annotations

import enum
import json
import posixpath
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from mammoeval.errors import DecodeError, SchemaError


class ViewKey(str, enum.Enum):
    L_CC = "L-CC"
    R_CC = "R-CC"
    L_MLO = "L-MLO"
    R_MLO = "R-MLO"

    def __str__(self) -> str:
        return self.value

    @property
    def side(self) -> BreastSide:
        return BreastSide.LEFT if self.value.startswith("L") else BreastSide.RIGHT


class BreastSide(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    def __str__(self) -> str:
        return self.value

    @property
    def views(self) -> tuple[ViewKey, ViewKey]:
        if self is BreastSide.LEFT:
            return (ViewKey.L_CC, ViewKey.L_MLO)
        return (ViewKey.R_CC, ViewKey.R_MLO)


# Document key order; also the order views are visited everywhere else.
VIEW_ORDER = (ViewKey.L_CC, ViewKey.R_CC, ViewKey.L_MLO, ViewKey.R_MLO)
SIDES = (BreastSide.LEFT, BreastSide.RIGHT)
FLIP_VALUES = ("YES", "NO")
RECORD_KEYS = frozenset([*(v.value for v in VIEW_ORDER), "cancer_label", "horizontal_flip"])
LABEL_KEYS = frozenset(["left_malignant", "right_malignant"])


@dataclass(frozen=True)
class CancerLabel:
    left_malignant: int
    right_malignant: int

    def __post_init__(self):
        for name in ("left_malignant", "right_malignant"):
            value = getattr(self, name)
            if type(value) is not int or value not in (0, 1):
                raise SchemaError(f"{name} must be 0 or 1, got {value!r}")

    def for_side(self, side: BreastSide) -> int:
        return self.left_malignant if side is BreastSide.LEFT else self.right_malignant


@dataclass(frozen=True)
class Exam:
    exam_id: int
    views: dict[ViewKey, tuple[str, ...]]
    cancer_label: CancerLabel
    horizontal_flip: str = "NO"

    def __post_init__(self):
        if set(self.views) != set(VIEW_ORDER):
            raise SchemaError(f"exam {self.exam_id}: views must cover exactly {[v.value for v in VIEW_ORDER]}")
        for view, paths in self.views.items():
            for p in paths:
                check_short_path(p, f"exam {self.exam_id} {view.value}")
        if self.horizontal_flip not in FLIP_VALUES:
            raise SchemaError(f"exam {self.exam_id}: horizontal_flip must be YES or NO, got {self.horizontal_flip!r}")

    def images(self, side: BreastSide | None = None) -> list[tuple[ViewKey, int, str]]:
        """(view, position, short path) for every image, in document view order."""
        out = []
        for view in VIEW_ORDER:
            if side is not None and view.side is not side:
                continue
            out.extend((view, i, p) for i, p in enumerate(self.views[view]))
        return out

    def n_images(self, side: BreastSide | None = None) -> int:
        return len(self.images(side))


@dataclass(frozen=True)
class Dataset:
    exams: tuple[Exam, ...]
    image_root: Path = field(default_factory=lambda: Path("."))
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.exams)

    def resolve(self, short_path: str) -> Path:
        """Full path for a shortened path.

        A path with no suffix that does not exist as-is falls back to the
        same name with ``.png`` appended.
        """
        full = self.image_root / short_path
        if not full.exists() and not PurePosixPath(short_path).suffix:
            png = full.with_name(full.name + ".png")
            if png.exists():
                return png
        return full


def check_short_path(path: object, where: str) -> None:
    if not isinstance(path, str) or not path:
        raise SchemaError(f"{where}: image path must be a non-empty string, got {path!r}")
    if path.startswith("/") or "\\" in path:
        raise SchemaError(f"{where}: image path must be relative POSIX, got {path!r}")
    if ".." in PurePosixPath(posixpath.normpath(path)).parts or ".." in path.split("/"):
        raise SchemaError(f"{where}: parent-directory traversal in {path!r}")


def _exam_from_record(k: int, record: object) -> Exam:
    if not isinstance(record, dict):
        raise SchemaError(f"exam {k}: record must be an object, got {type(record).__name__}")
    keys = set(record)
    if keys != RECORD_KEYS:
        missing = sorted(RECORD_KEYS - keys)
        unknown = sorted(keys - RECORD_KEYS)
        raise SchemaError(f"exam {k}: missing keys {missing}, unknown keys {unknown}")

    views = {}
    for view in VIEW_ORDER:
        paths = record[view.value]
        if not isinstance(paths, list):
            raise SchemaError(f"exam {k}: {view.value} must be a list")
        views[view] = tuple(paths)

    label = record["cancer_label"]
    if not isinstance(label, dict) or set(label) != LABEL_KEYS:
        raise SchemaError(f"exam {k}: cancer_label must have exactly keys {sorted(LABEL_KEYS)}")
    try:
        cancer_label = CancerLabel(label["left_malignant"], label["right_malignant"])
    except SchemaError as e:
        raise SchemaError(f"exam {k}: {e}") from None

    flip = record["horizontal_flip"]
    if not isinstance(flip, str):
        raise SchemaError(f"exam {k}: horizontal_flip must be a string")
    return Exam(k, views, cancer_label, flip)


def parse_metadata_bytes(data: bytes, *, image_root: Path | str = ".", name: str = "dataset") -> Dataset:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DecodeError(f"malformed metadata document: {e}") from None
    if not isinstance(doc, list):
        raise SchemaError("metadata document must be a top-level array of exam records")
    exams = tuple(_exam_from_record(k, rec) for k, rec in enumerate(doc))
    return Dataset(exams, Path(image_root), name)


def parse_metadata(file_path: Path | str, *, image_root: Path | str | None = None,
                   name: str | None = None) -> Dataset:
    """Read a metadata document into a :class:`Dataset`.

    ``image_root`` defaults to the document's directory and ``name`` to its
    stem.
    """
    file_path = Path(file_path)
    try:
        data = file_path.read_bytes()
    except OSError as e:
        raise DecodeError(f"cannot read {file_path}: {e}") from None
    return parse_metadata_bytes(
        data,
        image_root=file_path.parent if image_root is None else image_root,
        name=file_path.stem if name is None else name,
    )


def exam_to_record(exam: Exam) -> dict:
    record: dict = {view.value: list(exam.views[view]) for view in VIEW_ORDER}
    record["cancer_label"] = {
        "left_malignant": exam.cancer_label.left_malignant,
        "right_malignant": exam.cancer_label.right_malignant,
    }
    record["horizontal_flip"] = exam.horizontal_flip
    return record


def serialize_metadata(dataset: Dataset) -> bytes:
    records = [exam_to_record(e) for e in dataset.exams]
    return (json.dumps(records, indent=2) + "\n").encode("utf-8")


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    exam_id: int
    message: str
    path: str | None = None


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def fatal(self) -> bool:
        return bool(self.errors)

    def format(self) -> str:
        lines = [f"{i.severity}: {i.message}" for i in self.issues]
        lines.append(f"{len(self.errors)} errors, {len(self.warnings)} warnings")
        return "\n".join(lines)


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Check that every referenced image exists and flag empty exams/breasts."""
    report = ValidationReport()
    for exam in dataset.exams:
        k = exam.exam_id
        for _, _, short in exam.images():
            full = dataset.resolve(short)
            if not full.is_file():
                report.issues.append(Issue("error", k, f"missing image for exam {k}: {full}", str(full)))
        if exam.n_images() == 0:
            report.issues.append(Issue("warning", k, f"exam {k} has no images"))
        for side in SIDES:
            if exam.n_images(side) == 0:
                report.issues.append(Issue("warning", k, f"{side.value} breast has no images for exam {k}"))
    return report
