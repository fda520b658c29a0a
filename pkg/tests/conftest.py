"""Shared fixtures: worked image fixtures, synthetic texture generators,
and manifest scaffolding."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from topotex import GrayImage, write_pgm


def gray(rows) -> GrayImage:
    return GrayImage(np.asarray(rows, dtype=np.uint8))


@pytest.fixture
def ring_image() -> GrayImage:
    """3x3 with a bright border ring around a dark center pixel."""
    px = np.full((3, 3), 200, dtype=np.uint8)
    px[1, 1] = 50
    return GrayImage(px)


@pytest.fixture
def two_blob_strip() -> GrayImage:
    """1x5 strip with two bright pixels separated by a dark gap."""
    return gray([[10, 200, 10, 180, 10]])


def sugar_like(rng: np.random.Generator, size: int = 120) -> GrayImage:
    """Many 2-4 px bright discs scattered over dark noise."""
    img = rng.integers(10, 61, size=(size, size)).astype(np.int64)
    yy, xx = np.ogrid[:size, :size]
    for _ in range(int(rng.integers(80, 140))):
        cx, cy = rng.integers(0, size, size=2)
        r = float(rng.uniform(1.0, 2.0))
        v = int(rng.integers(170, 256))
        m = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        img[m] = np.maximum(img[m], v)
    return GrayImage(img.astype(np.uint8))


def flowers_like(rng: np.random.Generator, size: int = 120) -> GrayImage:
    """A few 20-30 px bright blobs with darker interior dimples."""
    img = rng.integers(10, 61, size=(size, size)).astype(np.int64)
    yy, xx = np.ogrid[:size, :size]
    for _ in range(int(rng.integers(3, 6))):
        cx, cy = rng.integers(10, size - 10, size=2)
        r = float(rng.uniform(10.0, 15.0))
        v = int(rng.integers(170, 231))
        blob = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        img[blob] = np.maximum(img[blob], v)
        for _ in range(int(rng.integers(2, 5))):
            dx, dy = rng.uniform(-r * 0.5, r * 0.5, size=2)
            dr = float(rng.uniform(1.5, 3.0))
            dv = int(rng.integers(100, 150))
            dimple = (xx - (cx + dx)) ** 2 + (yy - (cy + dy)) ** 2 <= dr * dr
            img[dimple & blob] = dv
    return GrayImage(img.astype(np.uint8))


def write_texture_manifest(directory: Path, n_per_class: int, seed: int = 42,
                           size: int = 120) -> Path:
    """Generate sugar-like / flowers-like PGM images plus a manifest whose
    annotations each cover one full image."""
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = directory / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for label, generator in (("sugar", sugar_like), ("flowers", flowers_like)):
            for i in range(n_per_class):
                img = generator(rng, size=size)
                name = f"{label}_{i:04d}.pgm"
                write_pgm(img, directory / name)
                fh.write(json.dumps({"image": name,
                                     "bbox": [0, 0, img.width, img.height],
                                     "label": label}) + "\n")
    return manifest
