#!/usr/bin/env python3
"""Load the published breast-level results as static results documents and
render the scoreboard.

    python3 scripts/ingest_published.py --out runs/published
"""

import argparse
import sys
from pathlib import Path

from mammoeval.registry import default_registry_dir, load_registry
from mammoeval.report import ingest_published, write_scoreboard


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("runs/published"))
    args = parser.parse_args(argv)

    registry = load_registry(default_registry_dir())
    written = ingest_published(args.out, registry)
    board = write_scoreboard(args.out, registry, args.out / "scoreboard.md")
    print(f"{len(written)} results documents in {args.out}")
    print(board.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
