import json
import random

import pytest

from mammoeval.errors import DescriptorError, MissingParam, UnknownParam, UnknownVariant
from mammoeval.registry import (
    ModelDescriptor,
    default_registry_dir,
    find,
    load_registry,
    placeholders,
    resolve_invocation,
    substitute,
)

PATHS = {"image_dir": "/data/img", "metadata": "/data/meta.json", "output": "/out/pred.csv"}


@pytest.fixture(scope="module")
def shipped():
    return load_registry(default_registry_dir())


def test_shipped_registry(shipped):
    assert [d.name for d in shipped] == ["dmv_cnn", "end2end", "faster_rcnn", "glam", "gmic"]
    variants = {d.name: set(d.variants) for d in shipped}
    assert variants == {
        "end2end": {"ddsm-resnet50", "inbreast-vgg16"},
        "faster_rcnn": set(),
        "dmv_cnn": {"nyu_model", "nyu_model_single"},
        "gmic": {"top1", "top5-ensemble"},
        "glam": {"model_joint", "model_sep"},
    }
    assert find(shipped, "glam").default_variant == "model_joint"
    assert find(shipped, "gmic").default_variant == "top1"
    assert find(shipped, "end2end").default_params["mean_pixel_intensity"] == "44.4"
    assert find(shipped, "faster_rcnn").params == ()


def test_dmv_cnn_four_view_requirement(shipped):
    d = find(shipped, "dmv_cnn")
    assert d.needs_four_views("nyu_model")
    assert not d.needs_four_views("nyu_model_single")


def test_column_labels(shipped):
    labels = {(d.name, v): d.column_label(v) for d in shipped for v in d.variant_names()}
    assert labels[("end2end", "ddsm-resnet50")] == "End2end (DDSM)"
    assert labels[("gmic", "top5-ensemble")] == "GMIC (top-5 ensemble)"
    assert labels[("faster_rcnn", None)] == "Faster R-CNN"


def test_empty_dir(tmp_path):
    assert load_registry(tmp_path) == []


def _write(tmp_path, name, **extra):
    doc = {
        "name": name, "container_image": "x/y:1",
        "entrypoint_args_template": ["{IMAGE_DIR}", "{METADATA_PATH}", "{OUTPUT_PATH}", "{DEVICE}"],
        "granularity": "breast-level",
    }
    doc.update(extra)
    (tmp_path / f"{name}-{random.random()}.json").write_text(json.dumps(doc))


def test_undeclared_placeholder(tmp_path):
    _write(tmp_path, "m", entrypoint_args_template=["{IMAGE_DIR}", "{GPU_COUNT}"])
    with pytest.raises(DescriptorError, match="GPU_COUNT"):
        load_registry(tmp_path)


def test_duplicate_names(tmp_path):
    _write(tmp_path, "m")
    _write(tmp_path, "m")
    with pytest.raises(DescriptorError, match="duplicate"):
        load_registry(tmp_path)


@pytest.mark.parametrize("bad", ["{not json", "[]", json.dumps({"name": "m"})])
def test_malformed(tmp_path, bad):
    (tmp_path / "m.json").write_text(bad)
    with pytest.raises(DescriptorError):
        load_registry(tmp_path)


def test_unknown_key(tmp_path):
    _write(tmp_path, "m", gpu_count=2)
    with pytest.raises(DescriptorError):
        load_registry(tmp_path)


def test_bad_mean_intensity(tmp_path):
    _write(tmp_path, "m", params=["mean_pixel_intensity"], default_params={"mean_pixel_intensity": "300"})
    with pytest.raises(DescriptorError):
        load_registry(tmp_path)


def test_load_order_is_sorted(tmp_path):
    for n in ["zeta", "alpha", "mid"]:
        _write(tmp_path, n)
    assert [d.name for d in load_registry(tmp_path)] == ["alpha", "mid", "zeta"]


def test_end2end_override(shipped):
    inv = resolve_invocation(find(shipped, "end2end"), "ddsm-resnet50", {"mean_pixel_intensity": "52.18"},
                             paths=PATHS, device="gpu")
    assert inv.args == ("/data/img", "/data/meta.json", "/out/pred.csv", "gpu", "ddsm_resnet50", "52.18")


def test_end2end_default_intensity(shipped):
    inv = resolve_invocation(find(shipped, "end2end"), "inbreast-vgg16", paths=PATHS)
    assert inv.args[-2:] == ("inbreast_vgg16", "44.4")


def test_paths_only(shipped):
    inv = resolve_invocation(find(shipped, "faster_rcnn"), paths=PATHS, device="cpu")
    assert inv.args == ("/data/img", "/data/meta.json", "/out/pred.csv", "cpu")
    assert inv.variant is None


def test_gmic_variants_differ_only_in_model_arg(shipped):
    d = find(shipped, "gmic")
    a = resolve_invocation(d, "top1", paths=PATHS).args
    b = resolve_invocation(d, "top5-ensemble", paths=PATHS).args
    template = d.entrypoint_args_template
    hand = lambda m: tuple(t.replace("{IMAGE_DIR}", "/data/img").replace("{METADATA_PATH}", "/data/meta.json")
                           .replace("{OUTPUT_PATH}", "/out/pred.csv").replace("{DEVICE}", "cpu")
                           .replace("{model_index}", m) for t in template)
    assert a == hand("1")
    assert b == hand("ensemble")
    assert [x != y for x, y in zip(a, b)] == [False] * 4 + [True]


def test_precedence():
    d = ModelDescriptor("p", "img", ("{k}",), "breast-level", variants={"v": {"k": "variant"}},
                        default_params={"k": "default"}, params=("k",))
    assert resolve_invocation(d, paths=PATHS).args == ("default",)
    assert resolve_invocation(d, "v", paths=PATHS).args == ("variant",)
    assert resolve_invocation(d, "v", {"k": "override"}, paths=PATHS).args == ("override",)


def test_unknown_variant(shipped):
    with pytest.raises(UnknownVariant):
        resolve_invocation(find(shipped, "gmic"), "top3", paths=PATHS)


def test_unknown_override(shipped):
    with pytest.raises(UnknownParam):
        resolve_invocation(find(shipped, "faster_rcnn"), None, {"mean_pixel_intensity": "40"}, paths=PATHS)


def test_missing_param(shipped):
    # no default and no variant bundle for "weights"
    d = find(shipped, "end2end")
    bare = ModelDescriptor(d.name, d.container_image, d.entrypoint_args_template, d.granularity,
                           params=d.params, default_params=d.default_params)
    with pytest.raises(MissingParam, match="weights"):
        resolve_invocation(bare, paths=PATHS)


def test_substitution_idempotent(shipped):
    for d in shipped:
        for v in d.variant_names():
            inv = resolve_invocation(d, v, paths=PATHS)
            assert not placeholders(inv.args)
            assert substitute(inv.args, inv.values) == inv.args
