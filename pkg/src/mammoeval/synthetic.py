"""Synthetic screening datasets: small random 16-bit PNGs plus metadata."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from mammoeval.core import VIEW_ORDER, CancerLabel, Dataset, Exam, serialize_metadata
from mammoeval.images import write_png16


def make_synthetic_dataset(root: Path | str, n_exams: int = 40, *, seed: int = 0, prevalence: float = 0.25,
                           missing_view_rate: float = 0.0, shape: tuple[int, int] = (8, 6),
                           name: str = "synthetic") -> Path:
    """Write ``root/images/*.png`` and ``root/metadata.json``; return the metadata path.

    Exam 0 always has a malignant left breast and a benign right breast so
    both classes are present at breast and image level.
    """
    root = Path(root)
    image_dir = root / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    exams = []
    for k in range(n_exams):
        left, right = (int(v) for v in rng.random(2) < prevalence)
        if k == 0:
            left, right = 1, 0
        views = {}
        for view in VIEW_ORDER:
            if k > 0 and rng.random() < missing_view_rate:
                views[view] = ()
                continue
            short = f"{k}_{view.value.replace('-', '_')}"
            write_png16(image_dir / f"{short}.png", rng.integers(0, 65536, size=shape, dtype=np.uint16))
            views[view] = (short,)
        flip = "YES" if rng.random() < 0.5 else "NO"
        exams.append(Exam(k, views, CancerLabel(left, right), flip))
    meta = root / "metadata.json"
    meta.write_bytes(serialize_metadata(Dataset(tuple(exams), image_dir, name)))
    return meta
