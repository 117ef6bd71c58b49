import json
import sys
import textwrap
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mammoeval.core import parse_metadata  # noqa: E402
from mammoeval.registry import load_registry, mock_registry_dir  # noqa: E402
from mammoeval.synthetic import make_synthetic_dataset  # noqa: E402

# Reference sample blocks, kept with their original indentation.
SAMPLE_IMAGE_CSV = """\
    image_index,malignant_pred,malignant_label
    0_L-CC,0.0081,1
    0_R-CC,0.3259,0
    0_L-MLO,0.0335,1
    0_R-MLO,0.1812,0
"""

SAMPLE_BREAST_CSV = """\
    index,left_malignant,right_malignant
    0,0.0091,0.0179
    1,0.0012,0.7258
    2,0.2325,0.1061
"""

EXAMPLE_RECORD = {
    "L-CC": ["0_L_CC"],
    "R-CC": ["0_R_CC"],
    "L-MLO": ["0_L_MLO"],
    "R-MLO": ["0_R_MLO"],
    "cancer_label": {"left_malignant": 0, "right_malignant": 0},
    "horizontal_flip": "NO",
}


def dedent_block(block: str) -> str:
    return textwrap.dedent(block)


def record(k=0, left=0, right=0, flip="NO", **views):
    rec = {v: views.get(v.replace("-", "_"), [f"{k}_{v}"]) for v in ("L-CC", "R-CC", "L-MLO", "R-MLO")}
    rec["cancer_label"] = {"left_malignant": left, "right_malignant": right}
    rec["horizontal_flip"] = flip
    return rec


def write_metadata(path: Path, records) -> Path:
    path.write_text(json.dumps(records), encoding="utf-8")
    return path


@pytest.fixture
def example_record():
    return json.loads(json.dumps(EXAMPLE_RECORD))


@pytest.fixture
def synthetic40(tmp_path):
    meta = make_synthetic_dataset(tmp_path / "ds", 40, seed=11)
    return meta, meta.parent / "images"


@pytest.fixture
def synthetic40_dataset(synthetic40):
    meta, images = synthetic40
    return parse_metadata(meta, image_root=images)


@pytest.fixture(scope="session")
def mock_registry():
    return load_registry(mock_registry_dir())


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
