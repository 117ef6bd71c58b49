"""PNG intake: bit-depth checks, rescaling to 16 bits, flips, mean intensity."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from mammoeval.core import Dataset
from mammoeval.errors import DepthError, EmptyDatasetError, ImageError

SUPPORTED_DEPTHS = (8, 12, 16)
U16_MAX = 65535
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# Published mean-pixel-intensity settings for the End2end model, 0-255 scale.
# Reference configuration values only; the source images are not available to
# re-derive them, and the pixel population behind them is undocumented.
REFERENCE_MEAN_INTENSITY = {
    "INbreast": 44.4,
    "DDSM": 52.18,
    "CMMD": 18.01,
    "NYU": 31.28,
    "OPTIMAM": 35.15,
    "CSAW-CC": 23.14,
}


@dataclass(frozen=True)
class ImageMeta:
    width: int
    height: int
    bit_depth: int
    channels: int


@dataclass(frozen=True)
class IntensityStats:
    mean_pixel_intensity: float
    pixel_count: int
    per_image_means: tuple[float, ...]


def _check_depth(source_depth: int) -> None:
    if source_depth not in SUPPORTED_DEPTHS:
        raise DepthError(f"unsupported bit depth {source_depth}; expected one of {SUPPORTED_DEPTHS}")


def rescale_to_16bit(pixels, source_depth: int) -> np.ndarray:
    """Map integers of ``source_depth`` bits linearly onto 0..65535.

    ``v -> round(v * 65535 / (2**d - 1))`` with halves rounded up, evaluated
    in exact integer arithmetic.
    """
    _check_depth(source_depth)
    arr = np.asarray(pixels)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise DepthError(f"pixels must be integers, got dtype {arr.dtype}")
    top = (1 << source_depth) - 1
    if arr.size and (arr.min() < 0 or arr.max() > top):
        raise DepthError(f"pixel values outside [0, {top}] for {source_depth}-bit data")
    if source_depth == 16:
        return arr.astype(np.uint16)
    # floor((2*v*65535 + top) / (2*top)) == round-half-up(v*65535/top); fits in int64.
    v = arr.astype(np.int64)
    return ((2 * v * U16_MAX + top) // (2 * top)).astype(np.uint16)


def apply_horizontal_flip(pixels, flip: str) -> np.ndarray:
    arr = np.asarray(pixels)
    if flip == "NO":
        return arr
    if flip == "YES":
        return arr[:, ::-1]
    raise ValueError(f"flip must be YES or NO, got {flip!r}")


def png_header(path: Path | str) -> ImageMeta:
    """Read width/height/depth/channels straight from the IHDR chunk."""
    with open(path, "rb") as f:
        head = f.read(33)
    if len(head) < 33 or head[:8] != PNG_SIGNATURE or head[12:16] != b"IHDR":
        raise ImageError(f"{path}: not a PNG file")
    width, height, depth, color_type = struct.unpack(">IIBB", head[16:26])
    channels = {0: 1, 2: 3, 3: 1, 4: 2, 6: 4}.get(color_type)
    if channels is None:
        raise ImageError(f"{path}: invalid PNG color type {color_type}")
    if color_type == 3:
        channels = 3  # palette images expand to RGB
    return ImageMeta(width, height, depth, channels)


def read_png(path: Path | str, source_depth: int | None = None) -> tuple[np.ndarray, ImageMeta]:
    """Load a grayscale PNG as a 16-bit array.

    8-bit files are rescaled. ``source_depth=12`` declares 12-bit data stored
    in a 16-bit container and rescales it; there is no auto-detection.
    """
    meta = png_header(path)
    if meta.channels != 1:
        raise ImageError(f"{path}: expected single-channel grayscale, found {meta.channels} channels")
    if meta.bit_depth not in (8, 16):
        raise DepthError(f"{path}: unsupported PNG bit depth {meta.bit_depth}")
    with Image.open(path) as im:
        arr = np.asarray(im)
    if source_depth is None:
        source_depth = meta.bit_depth
    elif source_depth > meta.bit_depth:
        raise DepthError(f"{path}: declared {source_depth}-bit data in a {meta.bit_depth}-bit file")
    out = rescale_to_16bit(arr, source_depth)
    return out, ImageMeta(meta.width, meta.height, source_depth, 1)


def write_png16(path: Path | str, pixels) -> None:
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ImageError("expected a 2-D array")
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint16)).save(path, format="PNG")


def compute_mean_intensity(dataset: Dataset, source_depth: int | None = None) -> IntensityStats:
    """Mean pixel value over every image of ``dataset`` on the 0-255 scale.

    All pixels count, background included. Sums are exact integers, so the
    result does not depend on the order images are visited.
    """
    total = 0
    count = 0
    per_image = []
    for exam in dataset.exams:
        for _, _, short in exam.images():
            pixels, _ = read_png(dataset.resolve(short), source_depth)
            s = int(pixels.sum(dtype=np.uint64))
            total += s
            count += pixels.size
            per_image.append(float(Fraction(s * 255, U16_MAX * pixels.size)) if pixels.size else 0.0)
    if count == 0:
        raise EmptyDatasetError(f"dataset {dataset.name!r} has no image pixels")
    mean = float(Fraction(total * 255, U16_MAX * count))
    return IntensityStats(mean, count, tuple(per_image))
