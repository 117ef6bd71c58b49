import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import EXAMPLE_RECORD, record, write_metadata
from mammoeval.core import (
    VIEW_ORDER,
    BreastSide,
    CancerLabel,
    Dataset,
    Exam,
    ViewKey,
    parse_metadata,
    parse_metadata_bytes,
    serialize_metadata,
    validate_dataset,
)
from mammoeval.errors import DecodeError, SchemaError


def test_view_keys_render_exactly():
    assert [str(v) for v in VIEW_ORDER] == ["L-CC", "R-CC", "L-MLO", "R-MLO"]
    assert ViewKey("L-MLO") is ViewKey.L_MLO
    with pytest.raises(ValueError):
        ViewKey("L_CC")


def test_view_sides():
    assert ViewKey.L_CC.side is BreastSide.LEFT
    assert ViewKey.L_MLO.side is BreastSide.LEFT
    assert ViewKey.R_CC.side is BreastSide.RIGHT
    assert ViewKey.R_MLO.side is BreastSide.RIGHT


def test_example_record_parses(tmp_path):
    ds = parse_metadata(write_metadata(tmp_path / "m.json", [EXAMPLE_RECORD]))
    assert len(ds) == 1
    exam = ds.exams[0]
    assert exam.exam_id == 0
    assert exam.cancer_label == CancerLabel(0, 0)
    assert exam.horizontal_flip == "NO"
    assert exam.views[ViewKey.R_MLO] == ("0_R_MLO",)


def test_empty_document_is_valid():
    assert len(parse_metadata_bytes(b"[]")) == 0


def test_label_two_rejected(example_record):
    example_record["cancer_label"]["left_malignant"] = 2
    with pytest.raises(SchemaError):
        parse_metadata_bytes(json.dumps([example_record]).encode())


@pytest.mark.parametrize("doc", [b"{not json", b"\xff\xfe", b""])
def test_malformed_document(doc):
    with pytest.raises(DecodeError):
        parse_metadata_bytes(doc)


def test_top_level_must_be_list():
    with pytest.raises(SchemaError):
        parse_metadata_bytes(json.dumps(EXAMPLE_RECORD).encode())


def test_missing_view_key_is_fatal_but_empty_list_is_fine(example_record):
    example_record["R-MLO"] = []
    ds = parse_metadata_bytes(json.dumps([example_record]).encode())
    assert ds.exams[0].views[ViewKey.R_MLO] == ()
    del example_record["R-MLO"]
    with pytest.raises(SchemaError):
        parse_metadata_bytes(json.dumps([example_record]).encode())


@pytest.mark.parametrize("path", ["../x", "a/../../b", "/abs/path", "a\\b", ""])
def test_traversal_rejected(example_record, path):
    example_record["L-CC"] = [path]
    with pytest.raises(SchemaError):
        parse_metadata_bytes(json.dumps([example_record]).encode())


def test_bool_labels_rejected(example_record):
    example_record["cancer_label"]["right_malignant"] = True
    with pytest.raises(SchemaError):
        parse_metadata_bytes(json.dumps([example_record]).encode())


def test_exam_id_is_position():
    recs = [record(k) for k in range(5)]
    ds = parse_metadata_bytes(json.dumps(recs).encode())
    assert [e.exam_id for e in ds.exams] == list(range(5))
    assert [e.views[ViewKey.L_CC] for e in ds.exams] == [(f"{k}_L-CC",) for k in range(5)]


def test_roundtrip_one_exam():
    ds = parse_metadata_bytes(json.dumps([EXAMPLE_RECORD]).encode())
    assert parse_metadata_bytes(serialize_metadata(ds)) == ds


def test_serialize_empty():
    assert json.loads(serialize_metadata(Dataset(()))) == []


def test_roundtrip_preserves_empty_list():
    recs = [record(0), record(1, left=1, R_MLO=[]), record(2, right=1, flip="YES")]
    ds = parse_metadata_bytes(json.dumps(recs).encode())
    again = parse_metadata_bytes(serialize_metadata(ds))
    assert again == ds
    assert again.exams[1].views[ViewKey.R_MLO] == ()
    assert json.loads(serialize_metadata(ds)) == recs


path_segment = st.text(alphabet="abcXYZ019_-.", min_size=1, max_size=8).filter(lambda s: s not in (".", ".."))
short_path = st.lists(path_segment, min_size=1, max_size=3).map("/".join)
exams = st.lists(
    st.tuples(
        st.lists(st.lists(short_path, max_size=3), min_size=4, max_size=4),
        st.integers(0, 1), st.integers(0, 1), st.sampled_from(["YES", "NO"]),
    ),
    max_size=6,
)


@given(exams)
def test_roundtrip_property(raw):
    ds = Dataset(tuple(
        Exam(k, {v: tuple(p) for v, p in zip(VIEW_ORDER, views)}, CancerLabel(l, r), flip)
        for k, (views, l, r, flip) in enumerate(raw)
    ))
    again = parse_metadata_bytes(serialize_metadata(ds))
    assert again == ds
    assert all(len(e.views) == 4 for e in again.exams)
    assert [e.exam_id for e in again.exams] == list(range(len(raw)))


def test_validate_all_present(synthetic40_dataset):
    report = validate_dataset(synthetic40_dataset)
    assert report.errors == []
    assert report.warnings == []
    assert not report.fatal


def test_validate_empty_right_breast(tmp_path):
    for name in ("0_L-CC", "0_L-MLO"):
        (tmp_path / name).write_bytes(b"x")
    ds = parse_metadata(write_metadata(tmp_path / "m.json", [record(0, R_CC=[], R_MLO=[])]))
    report = validate_dataset(ds)
    assert not report.fatal
    assert [w.message for w in report.warnings] == ["right breast has no images for exam 0"]


def test_validate_missing_file(tmp_path):
    ds = parse_metadata(write_metadata(tmp_path / "m.json", [EXAMPLE_RECORD]))
    report = validate_dataset(ds)
    assert report.fatal
    assert len(report.errors) == 4
    assert str(tmp_path / "0_L_CC") in report.errors[0].message


def test_validate_png_suffix_fallback(tmp_path):
    for name in ("0_L_CC", "0_R_CC", "0_L_MLO", "0_R_MLO"):
        (tmp_path / f"{name}.png").write_bytes(b"x")
    ds = parse_metadata(write_metadata(tmp_path / "m.json", [EXAMPLE_RECORD]))
    assert not validate_dataset(ds).fatal
