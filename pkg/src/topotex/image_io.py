"""Image loading, grayscale conversion, cropping, and patch subsampling.

Accepted input formats are 8-bit PNG (RGB or grayscale, decoded through
pillow) and binary PGM (P5, maxval 255, parsed here so tests need no image
library at all). RGB input is reduced to intensity with the BT.601 luma
weights using exact integer arithmetic, so results are bit-reproducible
across platforms.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundsError, DomainError, PatchTooSmallError

Bbox = tuple[int, int, int, int]

# per-mille luma weights; they sum to exactly 1000
_LUMA_R, _LUMA_G, _LUMA_B = 299, 587, 114


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An 8-bit grayscale raster.

    ``pixels`` is a read-only (height, width) uint8 array in row-major
    order. Instances are immutable and safe to share across workers.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("pixels must be a nonempty 2-d array")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def same_pixels(self, other: "GrayImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class AnnotationRecord:
    """One labeled rectangle on one image.

    ``bbox`` is (x0, y0, x1, y1) with half-open pixel ranges: the crop is
    (x1 - x0) wide and (y1 - y0) tall.
    """

    image_id: str
    bbox: Bbox
    label: str

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"bbox must satisfy x0<x1 and y0<y1, got {self.bbox}")
        if x0 < 0 or y0 < 0:
            raise ValueError(f"bbox coordinates must be non-negative, got {self.bbox}")
        if not self.label:
            raise ValueError("label must be a non-empty string")
        object.__setattr__(self, "bbox", (int(x0), int(y0), int(x1), int(y1)))


def rgb_to_gray(r: int, g: int, b: int) -> int:
    """BT.601 intensity of one pixel, rounded half away from zero.

    Computed in integers (weights are per-mille), so the .5 boundary cases
    are exact rather than at the mercy of binary float rounding.
    """
    for name, c in (("r", r), ("g", g), ("b", b)):
        if not (0 <= c <= 255):
            raise ValueError(f"channel {name}={c} outside [0, 255]")
    return (_LUMA_R * int(r) + _LUMA_G * int(g) + _LUMA_B * int(b) + 500) // 1000


def rgb_array_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Vectorized rgb_to_gray for an (h, w, 3) uint8 array."""
    arr = rgb.astype(np.uint32)
    gray = (_LUMA_R * arr[..., 0] + _LUMA_G * arr[..., 1] + _LUMA_B * arr[..., 2] + 500) // 1000
    return gray.astype(np.uint8)


def crop(img: GrayImage, bbox: Bbox) -> GrayImage:
    x0, y0, x1, y1 = bbox
    if x0 < 0:
        raise BoundsError(f"bbox x0={x0} < 0")
    if y0 < 0:
        raise BoundsError(f"bbox y0={y0} < 0")
    if x1 > img.width:
        raise BoundsError(f"bbox x1={x1} exceeds image width {img.width}")
    if y1 > img.height:
        raise BoundsError(f"bbox y1={y1} exceeds image height {img.height}")
    if not (x0 < x1 and y0 < y1):
        raise BoundsError(f"bbox must satisfy x0<x1 and y0<y1, got {bbox}")
    return GrayImage(img.pixels[y0:y1, x0:x1].copy())


def sample_corners(width: int, height: int, n: int, size: int, seed: int) -> list[tuple[int, int]]:
    """Top-left corners of n random size-by-size patches, uniform over the
    valid placement rectangle. Deterministic given the seed; overlaps are
    allowed."""
    if width < size or height < size:
        raise PatchTooSmallError(
            f"image {width}x{height} is smaller than patch size {size}"
        )
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, width - size, size=n, endpoint=True)
    ys = rng.integers(0, height - size, size=n, endpoint=True)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


def sample_patches(img: GrayImage, n: int, size: int, seed: int) -> list[GrayImage]:
    corners = sample_corners(img.width, img.height, n, size, seed)
    return [crop(img, (x, y, x + size, y + size)) for x, y in corners]


def annotation_seed(global_seed: int, image_id: str, bbox: Bbox) -> int:
    """Per-annotation RNG seed: the global seed combined with a stable hash
    of (image_id, bbox), so ingestion order and parallelism cannot change
    which patches get drawn."""
    key = f"{global_seed}:{image_id}:{bbox[0]},{bbox[1]},{bbox[2]},{bbox[3]}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


# --- file formats ---

_PGM_HEADER = re.compile(rb"^P5\s+(?:#.*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def read_pgm(data: bytes) -> GrayImage:
    m = _PGM_HEADER.match(data)
    if not m:
        raise DomainError("not a binary PGM (P5) file")
    w, h, maxval = (int(m.group(i)) for i in (1, 2, 3))
    if maxval != 255:
        raise DomainError(f"PGM maxval must be 255, got {maxval}")
    raster = data[m.end():]
    if len(raster) < w * h:
        raise DomainError(f"PGM raster truncated: expected {w * h} bytes, got {len(raster)}")
    arr = np.frombuffer(raster[: w * h], dtype=np.uint8).reshape(h, w)
    return GrayImage(arr.copy())


def write_pgm(img: GrayImage, path: str | Path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def _decode_png(data: bytes) -> GrayImage:
    from PIL import Image as PILImage

    try:
        with PILImage.open(io.BytesIO(data)) as im:
            if im.mode == "L":
                return GrayImage(np.asarray(im, dtype=np.uint8).copy())
            if im.mode in ("P", "RGB", "RGBA", "LA"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
                return GrayImage(rgb_array_to_gray(rgb))
    except DomainError:
        raise
    except (OSError, ValueError, SyntaxError) as exc:
        raise DomainError(f"corrupt PNG: {exc}") from exc
    raise DomainError("unsupported PNG mode; need 8-bit gray or RGB")


def load_image_bytes(data: bytes) -> GrayImage:
    """Decode PNG or binary PGM bytes to a GrayImage."""
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(data)
    if data[:2] == b"P5":
        return read_pgm(data)
    raise DomainError("unrecognized image format (want 8-bit PNG or binary PGM)")


def load_image(path: str | Path) -> GrayImage:
    return load_image_bytes(Path(path).read_bytes())


def read_manifest(path: str | Path) -> list[AnnotationRecord]:
    """Parse a JSON Lines annotation manifest.

    Each line is {"image": <path>, "bbox": [x0, y0, x1, y1], "label": <str>}.
    Blank lines are skipped. Image paths are kept verbatim as image ids;
    relative paths are resolved against the manifest's directory at load
    time by the pipeline.
    """
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            rec = AnnotationRecord(
                image_id=str(obj["image"]),
                bbox=tuple(int(v) for v in obj["bbox"]),
                label=str(obj["label"]),
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DomainError(f"{path}:{lineno}: bad manifest record: {exc}") from exc
        records.append(rec)
    return records
