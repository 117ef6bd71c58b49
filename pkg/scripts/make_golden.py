#!/usr/bin/env python3
"""Regenerate the pinned results document for the seeded-noise mock.

The acceptance suite compares a fresh run byte for byte against
tests/golden/mock_breast_noisy.results.json. Only rerun this after an
intentional change to the results format or the bootstrap, and check the
new numbers against the brute-force oracle (the acceptance test does that
too).

    python3 scripts/make_golden.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from mammoeval import pipeline
from mammoeval.metrics import EvaluationConfig
from mammoeval.registry import mock_registry_dir
from mammoeval.synthetic import make_synthetic_dataset

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "mock_breast_noisy.results.json"

# keep in sync with tests/test_acceptance.py
FIXTURE_SEED = 11
N_EXAMS = 40
CONFIG = EvaluationConfig(n_replicates=2000, master_seed=0)


def generate(workdir: Path) -> Path:
    meta = make_synthetic_dataset(workdir / "ds", N_EXAMS, seed=FIXTURE_SEED)
    _, path = pipeline.run(
        "mock_breast", variant="noisy", image_dir=meta.parent / "images", metadata=meta,
        output_dir=workdir / "out", backend="local", config=CONFIG, registry_dir=mock_registry_dir(),
        plots=False,
    )
    return path


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        path = generate(Path(tmp))
        GOLDEN.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(path, GOLDEN)
    print(f"wrote {GOLDEN}")
    print(GOLDEN.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
