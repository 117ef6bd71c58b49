"""Model output CSVs: strict parsing, joining to ground truth, aggregation.

Two dialects are accepted, each identified by its literal first line:

* image level: ``image_index,malignant_pred,malignant_label``
* breast level: ``index,left_malignant,right_malignant``

Fields are comma-separated without quoting. Ground-truth labels always come
from the dataset; labels written by a model are only cross-checked.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from mammoeval.core import SIDES, BreastSide, Dataset, ViewKey
from mammoeval.errors import BadValue, DuplicateImage, HeaderError, RowCountMismatch, UnknownImage

log = logging.getLogger(__name__)

IMAGE_HEADER = "image_index,malignant_pred,malignant_label"
BREAST_HEADER = "index,left_malignant,right_malignant"
_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")


@dataclass(frozen=True)
class ImagePrediction:
    image_index: str
    malignant_pred: float
    malignant_label: int
    exam_id: int
    view: ViewKey
    position: int

    @property
    def side(self) -> BreastSide:
        return self.view.side


@dataclass(frozen=True)
class BreastPrediction:
    exam_id: int
    side: BreastSide
    score: float
    label: int
    n_images: int = 1


@dataclass
class PredictionSet:
    granularity: str
    breasts: list[BreastPrediction]
    images: list[ImagePrediction] | None = None
    exclusions: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _read_lines(path: Path | str, header: str) -> list[tuple[int, str]]:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise HeaderError(f"{path}: not UTF-8: {e}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != header:
        got = lines[0] if lines else ""
        raise HeaderError(f"{path}: expected header {header!r}, got {got!r}")
    return list(enumerate(lines[1:], start=2))


def _split(line: str, lineno: int, path) -> list[str]:
    parts = line.split(",")
    if len(parts) != 3:
        raise BadValue(f"{path}:{lineno}: expected 3 fields, got {len(parts)}: {line!r}")
    return parts


def parse_score(token: str, where: str) -> float:
    if not _DECIMAL.fullmatch(token):
        raise BadValue(f"{where}: {token!r} is not a decimal number")
    v = float(token)
    if not math.isfinite(v) or not 0.0 <= v <= 1.0:
        raise BadValue(f"{where}: prediction {token} outside [0, 1]")
    return v


def _image_index(dataset: Dataset) -> dict[str, list[tuple[int, ViewKey, int]]]:
    index: dict[str, list[tuple[int, ViewKey, int]]] = {}
    for exam in dataset.exams:
        for view, pos, short in exam.images():
            index.setdefault(short, []).append((exam.exam_id, view, pos))
    return index


def parse_image_csv(path: Path | str, dataset: Dataset, warnings: list[str] | None = None) -> list[ImagePrediction]:
    """Parse an image-level CSV and join each row to its image in ``dataset``.

    Label disagreements with the dataset are reported through ``warnings``
    (and the log); the dataset label is kept.
    """
    index = _image_index(dataset)
    seen: set[str] = set()
    out = []
    for lineno, line in _read_lines(path, IMAGE_HEADER):
        where = f"{Path(path).name}:{lineno}"
        image_index, pred, label = _split(line, lineno, path)
        score = parse_score(pred, where)
        if label not in ("0", "1"):
            raise BadValue(f"{where}: malignant_label must be 0 or 1, got {label!r}")
        locations = index.get(image_index)
        if not locations:
            raise UnknownImage(f"{where}: image {image_index!r} is not in dataset {dataset.name!r}")
        if len(locations) > 1:
            raise UnknownImage(f"{where}: image {image_index!r} is referenced {len(locations)} times in the dataset")
        if image_index in seen:
            raise DuplicateImage(f"{where}: second prediction for image {image_index!r}")
        seen.add(image_index)
        exam_id, view, pos = locations[0]
        truth = dataset.exams[exam_id].cancer_label.for_side(view.side)
        if int(label) != truth:
            msg = f"{where}: model label {label} for {image_index!r} disagrees with dataset label {truth}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        out.append(ImagePrediction(image_index, score, truth, exam_id, view, pos))
    return out


def parse_breast_csv(path: Path | str, dataset: Dataset) -> list[BreastPrediction]:
    """Parse a breast-level CSV; row k is exam k regardless of the index column."""
    rows = _read_lines(path, BREAST_HEADER)
    if len(rows) != len(dataset):
        raise RowCountMismatch(f"{path}: {len(rows)} prediction rows for {len(dataset)} exams")
    out = []
    for exam, (lineno, line) in zip(dataset.exams, rows):
        where = f"{Path(path).name}:{lineno}"
        idx, left, right = _split(line, lineno, path)
        if not _INTEGER.fullmatch(idx):
            raise BadValue(f"{where}: index {idx!r} is not an integer")
        for side, token in zip(SIDES, (left, right)):
            out.append(BreastPrediction(
                exam.exam_id, side, parse_score(token, where), exam.cancer_label.for_side(side),
                exam.n_images(side),
            ))
    return out


def aggregate_to_breast(preds: list[ImagePrediction], dataset: Dataset,
                        exclusions: list[str] | None = None) -> list[BreastPrediction]:
    """Average image scores per breast, pooling both views and repeats.

    Breasts without any image prediction are left out and noted in
    ``exclusions``. Output is in exam order, left before right.
    """
    grouped: dict[tuple[int, BreastSide], list[float]] = {}
    for p in preds:
        grouped.setdefault((p.exam_id, p.side), []).append(p.malignant_pred)
    out = []
    for exam in dataset.exams:
        for side in SIDES:
            scores = grouped.get((exam.exam_id, side))
            if not scores:
                msg = f"exam {exam.exam_id} {side.value} breast: no image predictions"
                if exclusions is not None:
                    exclusions.append(msg)
                continue
            # fsum of the sorted values keeps the mean independent of row order
            score = math.fsum(sorted(scores)) / len(scores)
            score = min(max(score, min(scores)), max(scores))
            out.append(BreastPrediction(exam.exam_id, side, score, exam.cancer_label.for_side(side), len(scores)))
    return out


def load_predictions(path: Path | str, dataset: Dataset, granularity: str) -> PredictionSet:
    if granularity == "image-level":
        warnings: list[str] = []
        exclusions: list[str] = []
        images = parse_image_csv(path, dataset, warnings)
        breasts = aggregate_to_breast(images, dataset, exclusions)
        return PredictionSet(granularity, breasts, images, exclusions, warnings)
    if granularity == "breast-level":
        kept, exclusions = [], []
        for b in parse_breast_csv(path, dataset):
            if b.n_images == 0:
                exclusions.append(f"exam {b.exam_id} {b.side.value} breast: no images in dataset")
            else:
                kept.append(b)
        return PredictionSet(granularity, kept, None, exclusions)
    raise ValueError(f"unknown granularity {granularity!r}")


def format_score(v: float, decimals: int | None = 4) -> str:
    return repr(float(v)) if decimals is None else f"{v:.{decimals}f}"


def write_image_csv(path: Path | str, rows, decimals: int | None = 4) -> None:
    """``rows`` are ``(image_index, pred, label)`` triples."""
    lines = [IMAGE_HEADER]
    lines += [f"{idx},{format_score(p, decimals)},{int(y)}" for idx, p, y in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_breast_csv(path: Path | str, rows, decimals: int | None = 4) -> None:
    """``rows`` are ``(left_pred, right_pred)`` pairs, one per exam in order."""
    lines = [BREAST_HEADER]
    lines += [f"{k},{format_score(l, decimals)},{format_score(r, decimals)}" for k, (l, r) in enumerate(rows)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
