#!/usr/bin/env python3
"""Run the mock models end to end on a synthetic dataset, no containers needed.

Writes a synthetic dataset, runs every mock variant that produces usable
output through the local-process backend, and renders a scoreboard.

    python3 scripts/demo_pipeline.py --out runs/demo --exams 60
"""

import argparse
import logging
import sys
from pathlib import Path

from mammoeval import pipeline
from mammoeval.errors import HarnessError
from mammoeval.metrics import EvaluationConfig
from mammoeval.registry import load_registry, mock_registry_dir
from mammoeval.report import write_scoreboard
from mammoeval.synthetic import make_synthetic_dataset

RUNS = [
    ("mock_breast", "oracle"),
    ("mock_breast", "anti-oracle"),
    ("mock_breast", "noisy"),
    ("mock_image", "oracle"),
    ("mock_image", "noisy"),
    # expected to fail; shows the error path
    ("mock_breast", "fail"),
]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/demo"))
    p.add_argument("--exams", type=int, default=40)
    p.add_argument("--seed", type=int, default=0, help="bootstrap master seed")
    p.add_argument("--fixture-seed", type=int, default=11)
    p.add_argument("--replicates", type=int, default=2000)
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    meta = make_synthetic_dataset(args.out / "dataset", args.exams, seed=args.fixture_seed, name="synthetic")
    config = EvaluationConfig(n_replicates=args.replicates, master_seed=args.seed)
    for model, variant in RUNS:
        try:
            doc, path = pipeline.run(model, variant=variant, image_dir=meta.parent / "images", metadata=meta,
                                     output_dir=args.out, backend="local", config=config,
                                     registry_dir=mock_registry_dir(), dataset_name="synthetic")
        except HarnessError as e:
            print(f"{model}/{variant}: {type(e).__name__} (exit code {e.exit_code})")
            continue
        cells = ", ".join(f"{m.level} {m.metric} {m.format()}" for m in doc.metrics)
        print(f"{model}/{variant}: {cells}")

    board = write_scoreboard(args.out / "results", load_registry(mock_registry_dir()), args.out / "scoreboard.md")
    print()
    print(board.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
