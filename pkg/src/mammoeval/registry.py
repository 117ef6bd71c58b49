"""Model descriptors: what to run, how to call it, and which knobs it has.

A descriptor is one JSON file per model::

    {
      "name": "gmic",
      "display_name": "GMIC",
      "container_image": "mammoeval/gmic:latest",
      "entrypoint_args_template": ["{IMAGE_DIR}", "{METADATA_PATH}",
                                   "{OUTPUT_PATH}", "{DEVICE}", "{model_index}"],
      "granularity": "image-level",
      "requires_all_four_views": false,
      "params": ["model_index"],
      "default_params": {"model_index": "1"},
      "variants": {"top1": {"model_index": "1"},
                   "top5-ensemble": {"model_index": "1,2,3,4,5"}},
      "default_variant": "top1",
      "column_labels": {"top1": "GMIC (single)"}
    }

Optional keys: ``display_name``, ``params``, ``default_params``,
``variants``, ``default_variant``, ``column_labels``,
``single_view_variants`` (variants exempt from the four-view requirement)
and ``local_entrypoint`` (script path, relative to the descriptor file, used
by the local-process backend).

Placeholders are ``{NAME}`` tokens. ``IMAGE_DIR``, ``METADATA_PATH``,
``OUTPUT_PATH`` and ``DEVICE`` are always available; any other placeholder
must be a declared parameter.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from mammoeval.errors import DescriptorError, MissingParam, UnknownParam, UnknownVariant

PATH_PLACEHOLDERS = ("IMAGE_DIR", "METADATA_PATH", "OUTPUT_PATH", "DEVICE")
GRANULARITIES = ("image-level", "breast-level")
DEVICES = ("cpu", "gpu")
PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")
_KNOWN_KEYS = {
    "name", "display_name", "container_image", "entrypoint_args_template", "granularity",
    "requires_all_four_views", "params", "default_params", "variants", "default_variant",
    "column_labels", "single_view_variants", "local_entrypoint",
}


def placeholders(template) -> set[str]:
    return {m for arg in template for m in PLACEHOLDER_RE.findall(arg)}


def substitute(template, values: dict[str, str]) -> tuple[str, ...]:
    """Fill ``{NAME}`` tokens in one pass; unknown names are left untouched."""
    def fill(m):
        return values.get(m.group(1), m.group(0))
    return tuple(PLACEHOLDER_RE.sub(fill, arg) for arg in template)


def check_params(bundle: dict[str, str], where: str) -> None:
    for key, value in bundle.items():
        if not isinstance(value, str):
            raise DescriptorError(f"{where}: parameter {key!r} must be a string, got {value!r}")
    if "mean_pixel_intensity" in bundle:
        raw = bundle["mean_pixel_intensity"]
        try:
            v = float(raw)
        except ValueError:
            raise DescriptorError(f"{where}: mean_pixel_intensity {raw!r} is not a number") from None
        if not 0.0 <= v <= 255.0:
            raise DescriptorError(f"{where}: mean_pixel_intensity {raw} outside [0, 255]")


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    container_image: str
    entrypoint_args_template: tuple[str, ...]
    granularity: str
    requires_all_four_views: bool = False
    variants: dict[str, dict[str, str]] = field(default_factory=dict)
    default_params: dict[str, str] = field(default_factory=dict)
    params: tuple[str, ...] = ()
    default_variant: str | None = None
    display_name: str = ""
    column_labels: dict[str, str] = field(default_factory=dict)
    single_view_variants: tuple[str, ...] = ()
    local_entrypoint: Path | None = None

    def __post_init__(self):
        where = f"descriptor {self.name!r}"
        if not self.name or not re.fullmatch(r"[A-Za-z0-9_.-]+", self.name):
            raise DescriptorError(f"{where}: invalid name")
        if self.granularity not in GRANULARITIES:
            raise DescriptorError(f"{where}: granularity must be one of {GRANULARITIES}")
        declared = set(self.params)
        for key in self.default_params:
            if key not in declared:
                raise DescriptorError(f"{where}: default for undeclared parameter {key!r}")
        check_params(self.default_params, where)
        for vname, bundle in self.variants.items():
            for key in bundle:
                if key not in declared:
                    raise DescriptorError(f"{where}: variant {vname!r} sets undeclared parameter {key!r}")
            check_params(bundle, f"{where} variant {vname!r}")
        bad = placeholders(self.entrypoint_args_template) - declared - set(PATH_PLACEHOLDERS)
        if bad:
            raise DescriptorError(f"{where}: undeclared placeholders {sorted(bad)}")
        if self.default_variant is not None and self.default_variant not in self.variants:
            raise DescriptorError(f"{where}: default_variant {self.default_variant!r} is not a variant")
        for v in [*self.column_labels, *self.single_view_variants]:
            if v not in self.variants:
                raise DescriptorError(f"{where}: unknown variant {v!r}")

    def variant_names(self) -> list[str | None]:
        return list(self.variants) or [None]

    def column_label(self, variant: str | None) -> str:
        base = self.display_name or self.name
        if variant is None:
            return base
        return self.column_labels.get(variant, f"{base} ({variant})")

    def needs_four_views(self, variant: str | None) -> bool:
        return self.requires_all_four_views and variant not in self.single_view_variants


@dataclass(frozen=True)
class ResolvedInvocation:
    model: str
    variant: str | None
    container_image: str
    granularity: str
    template: tuple[str, ...]
    values: dict[str, str]
    local_entrypoint: Path | None = None

    @property
    def args(self) -> tuple[str, ...]:
        return substitute(self.template, self.values)

    @property
    def device(self) -> str:
        return self.values["DEVICE"]

    def with_paths(self, image_dir, metadata, output) -> ResolvedInvocation:
        """Same invocation with different path values (e.g. in-container paths)."""
        values = dict(self.values, IMAGE_DIR=str(image_dir), METADATA_PATH=str(metadata), OUTPUT_PATH=str(output))
        return replace(self, values=values)


def resolve_invocation(desc: ModelDescriptor, variant: str | None = None,
                       overrides: dict[str, str] | None = None, *, paths: dict,
                       device: str = "cpu") -> ResolvedInvocation:
    """Bind a descriptor to concrete arguments.

    Parameter precedence is overrides, then the variant bundle, then the
    descriptor defaults. ``paths`` needs ``image_dir``, ``metadata`` and
    ``output``.
    """
    overrides = dict(overrides or {})
    if variant is None:
        variant = desc.default_variant
    if variant is not None and variant not in desc.variants:
        raise UnknownVariant(f"model {desc.name!r} has no variant {variant!r}; known: {sorted(desc.variants)}")
    if device not in DEVICES:
        raise ValueError(f"device must be one of {DEVICES}")
    for key in overrides:
        if key not in desc.params:
            raise UnknownParam(f"model {desc.name!r} does not declare parameter {key!r}")
    check_params(overrides, f"overrides for {desc.name!r}")

    values = dict(desc.default_params)
    if variant is not None:
        values.update(desc.variants[variant])
    values.update(overrides)
    values.update(
        IMAGE_DIR=str(paths["image_dir"]),
        METADATA_PATH=str(paths["metadata"]),
        OUTPUT_PATH=str(paths["output"]),
        DEVICE=device,
    )
    missing = placeholders(desc.entrypoint_args_template) - set(values)
    if missing:
        raise MissingParam(f"model {desc.name!r}: no value for {sorted(missing)}")
    return ResolvedInvocation(
        model=desc.name,
        variant=variant,
        container_image=desc.container_image,
        granularity=desc.granularity,
        template=desc.entrypoint_args_template,
        values=values,
        local_entrypoint=desc.local_entrypoint,
    )


def descriptor_from_dict(doc: dict, base_dir: Path | None = None) -> ModelDescriptor:
    if not isinstance(doc, dict):
        raise DescriptorError("descriptor must be a JSON object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise DescriptorError(f"unknown descriptor keys {sorted(unknown)}")
    try:
        template = doc["entrypoint_args_template"]
        if not isinstance(template, list) or not all(isinstance(a, str) for a in template):
            raise DescriptorError("entrypoint_args_template must be a list of strings")
        local = doc.get("local_entrypoint")
        if local is not None:
            local = Path(local)
            if base_dir is not None and not local.is_absolute():
                local = base_dir / local
        return ModelDescriptor(
            name=doc["name"],
            container_image=doc["container_image"],
            entrypoint_args_template=tuple(template),
            granularity=doc["granularity"],
            requires_all_four_views=bool(doc.get("requires_all_four_views", False)),
            variants={k: dict(v) for k, v in doc.get("variants", {}).items()},
            default_params=dict(doc.get("default_params", {})),
            params=tuple(doc.get("params", ())),
            default_variant=doc.get("default_variant"),
            display_name=doc.get("display_name", ""),
            column_labels=dict(doc.get("column_labels", {})),
            single_view_variants=tuple(doc.get("single_view_variants", ())),
            local_entrypoint=local,
        )
    except KeyError as e:
        raise DescriptorError(f"descriptor missing required key {e}") from None
    except (TypeError, ValueError) as e:
        raise DescriptorError(f"malformed descriptor: {e}") from None


def load_descriptor(path: Path | str) -> ModelDescriptor:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DescriptorError(f"{path}: {e}") from None
    try:
        return descriptor_from_dict(doc, path.parent)
    except DescriptorError as e:
        raise DescriptorError(f"{path.name}: {e}") from None


def load_registry(directory: Path | str) -> list[ModelDescriptor]:
    """Load every ``*.json`` descriptor in ``directory``, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DescriptorError(f"registry directory {directory} does not exist")
    descs = [load_descriptor(p) for p in directory.glob("*.json")]
    descs.sort(key=lambda d: d.name)
    for a, b in zip(descs, descs[1:]):
        if a.name == b.name:
            raise DescriptorError(f"duplicate model name {a.name!r}")
    return descs


def default_registry_dir() -> Path:
    return Path(str(resources.files("mammoeval") / "models"))


def mock_registry_dir() -> Path:
    return Path(str(resources.files("mammoeval") / "mocks" / "registry"))


def find(descs: list[ModelDescriptor], name: str) -> ModelDescriptor:
    for d in descs:
        if d.name == name:
            return d
    raise DescriptorError(f"no model named {name!r}; known: {[d.name for d in descs]}")
