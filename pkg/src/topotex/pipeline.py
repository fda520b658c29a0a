"""Batch ingestion: manifest -> crop -> random patches -> persistence ->
landscape embedding -> per-annotation average, with a content-addressed
cache and deterministic train/test splits.

Determinism contract: (manifest, global seed, config) fully determines
every embedding. Each annotation derives its own RNG seed from the global
seed and a stable hash of (image id, bbox), so neither manifest order nor
the worker count can change any result. Workers only compute; the parent
process owns the cache and merges results in manifest order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cubical import build_superlevel_filtration, compute_persistence
from .errors import DomainError, InsufficientClassError, PatchTooSmallError
from .image_io import (AnnotationRecord, Bbox, annotation_seed, crop,
                       load_image_bytes, read_manifest, sample_corners)
from .landscapes import (LandscapeEmbedding, LandscapeGrid,
                         average_embeddings, embed)

log = logging.getLogger("topotex.pipeline")


@dataclass(frozen=True)
class PipelineConfig:
    patch_size: int = 96
    patches_per_annotation: int = 6
    k: int = 5
    samples: int = 200
    grid_min: float = 0.0
    grid_max: float = 255.0
    seed: int = 0
    cache_dir: str | None = None

    def __post_init__(self):
        if self.patch_size < 1 or self.patches_per_annotation < 1:
            raise ValueError("patch_size and patches_per_annotation must be >= 1")
        if self.k < 1 or self.samples < 2:
            raise ValueError("need k >= 1 landscape functions and samples >= 2")

    @property
    def grid(self) -> LandscapeGrid:
        return LandscapeGrid(self.grid_min, self.grid_max, self.samples)

    def fingerprint(self) -> str:
        """Hash of every field that influences embedding values."""
        payload = json.dumps(
            {
                "patch_size": self.patch_size,
                "patches": self.patches_per_annotation,
                "k": self.k,
                "samples": self.samples,
                "grid": [self.grid_min, self.grid_max],
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("ascii")).hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "patch_size": self.patch_size,
            "patches_per_annotation": self.patches_per_annotation,
            "k": self.k,
            "samples": self.samples,
            "grid_min": self.grid_min,
            "grid_max": self.grid_max,
            "seed": self.seed,
            "cache_dir": self.cache_dir,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Provenance:
    """Everything needed to recompute one annotation's embedding bit-exactly
    (corners are patch top-left positions inside the cropped annotation)."""

    image_id: str
    bbox: Bbox
    seed: int
    corners: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class EmbeddedAnnotation:
    id: str
    label: str
    embedding: LandscapeEmbedding
    provenance: Provenance


@dataclass(frozen=True)
class SplitSpec:
    train: int = 350
    test: int = 200
    seed: int = 0


@dataclass
class IngestReport:
    processed: int = 0
    cache_hits: int = 0
    skipped: list[tuple[str, Bbox, str]] = field(default_factory=list)
    failed: list[tuple[str, Bbox, str]] = field(default_factory=list)


@dataclass
class IngestResult:
    annotations: list[EmbeddedAnnotation]
    report: IngestReport


class EmbeddingCache:
    """Append-only binary store of float64 vectors plus a JSON index.

    Keys are content hashes of (image bytes, bbox, per-annotation seed,
    config fingerprint), so renamed or re-downloaded files still hit and
    any config change misses. Only one process may write.
    """

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.bin_path = self.dir / "embeddings.bin"
        self.index_path = self.dir / "index.json"
        if self.index_path.exists():
            self.index: dict[str, dict] = json.loads(self.index_path.read_text())
        else:
            self.index = {}
        self._dirty = False

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def get(self, key: str) -> np.ndarray | None:
        entry = self.index.get(key)
        if entry is None:
            return None
        with open(self.bin_path, "rb") as fh:
            fh.seek(entry["offset"])
            raw = fh.read(entry["count"] * 8)
        return np.frombuffer(raw, dtype="<f8").copy()

    def put(self, key: str, values: np.ndarray) -> None:
        if key in self.index:
            return
        data = np.ascontiguousarray(values, dtype="<f8").tobytes()
        with open(self.bin_path, "ab") as fh:
            offset = fh.tell()
            fh.write(data)
        self.index[key] = {"offset": offset, "count": int(values.size)}
        self._dirty = True

    def flush(self) -> None:
        if self._dirty:
            self.index_path.write_text(json.dumps(self.index, sort_keys=True))
            self._dirty = False


def annotation_key(image_bytes: bytes, bbox: Bbox, seed: int, fingerprint: str) -> str:
    h = hashlib.sha256()
    h.update(image_bytes)
    h.update(f"|{bbox[0]},{bbox[1]},{bbox[2]},{bbox[3]}|{seed}|{fingerprint}".encode("ascii"))
    return h.hexdigest()


def embed_annotation(image_bytes: bytes, record: AnnotationRecord,
                     config: PipelineConfig) -> tuple[np.ndarray, Provenance]:
    """Crop, draw patches, run persistence per patch, embed, average."""
    img = load_image_bytes(image_bytes)
    region = crop(img, record.bbox)
    seed = annotation_seed(config.seed, record.image_id, record.bbox)
    corners = sample_corners(region.width, region.height,
                             config.patches_per_annotation, config.patch_size, seed)
    size = config.patch_size
    parts = []
    for x, y in corners:
        patch = crop(region, (x, y, x + size, y + size))
        bc = compute_persistence(build_superlevel_filtration(patch))
        parts.append(embed(bc, k=config.k, grid=config.grid))
    mean = average_embeddings(parts)
    return mean.values, Provenance(record.image_id, record.bbox, seed, tuple(corners))


def _worker(task):
    # workers read their own image so the parent never holds all pixel data
    idx, path, record, config = task
    try:
        values, prov = embed_annotation(Path(path).read_bytes(), record, config)
        return idx, "ok", values, prov
    except PatchTooSmallError as exc:
        return idx, "skip", str(exc), None
    except (DomainError, OSError) as exc:
        return idx, "fail", str(exc), None


def _resolve(image_id: str, base: Path) -> Path:
    p = Path(image_id)
    return p if p.is_absolute() else base / p


def ingest(manifest_path: str | Path, config: PipelineConfig,
           jobs: int = 1) -> IngestResult:
    """Embed every usable annotation in the manifest.

    Unreadable images and undersized annotations never abort the run; they
    are collected in the report. With jobs > 1 the persistence work fans
    out over a process pool, and the output is still merged in manifest
    order so the result is identical to a serial run.
    """
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    base = manifest_path.parent
    cache = EmbeddingCache(config.cache_dir) if config.cache_dir else None
    fingerprint = config.fingerprint()

    report = IngestReport()
    results: dict[int, EmbeddedAnnotation] = {}
    pending = []  # (idx, image path, record, config)
    keys: dict[int, str] = {}

    for idx, rec in enumerate(records):
        path = _resolve(rec.image_id, base)
        try:
            image_bytes = path.read_bytes()
        except OSError as exc:
            report.failed.append((rec.image_id, rec.bbox, str(exc)))
            continue
        seed = annotation_seed(config.seed, rec.image_id, rec.bbox)
        key = annotation_key(image_bytes, rec.bbox, seed, fingerprint)
        del image_bytes
        keys[idx] = key
        if cache is not None:
            hit = cache.get(key)
            if hit is not None:
                emb = LandscapeEmbedding(hit, grid=config.grid, k=config.k)
                prov = _provenance_for(rec, config, seed)
                results[idx] = EmbeddedAnnotation(key[:16], rec.label, emb, prov)
                report.cache_hits += 1
                continue
        pending.append((idx, str(path), rec, config))

    if jobs > 1 and len(pending) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=jobs) as pool:
            outcomes = pool.map(_worker, pending, chunksize=1)
    else:
        outcomes = [_worker(task) for task in pending]

    for idx, status, payload, prov in outcomes:
        rec = records[idx]
        if status == "ok":
            emb = LandscapeEmbedding(payload, grid=config.grid, k=config.k)
            key = keys[idx]
            if cache is not None:
                cache.put(key, emb.values)
            results[idx] = EmbeddedAnnotation(key[:16], rec.label, emb, prov)
        elif status == "skip":
            log.warning("skipping %s %s: %s", rec.image_id, rec.bbox, payload)
            report.skipped.append((rec.image_id, rec.bbox, payload))
        else:
            report.failed.append((rec.image_id, rec.bbox, payload))

    if cache is not None:
        cache.flush()

    annotations = [results[i] for i in sorted(results)]
    report.processed = len(annotations)
    return IngestResult(annotations, report)


def _provenance_for(rec: AnnotationRecord, config: PipelineConfig,
                    seed: int) -> Provenance:
    # cheap re-derivation for cache hits: corners depend only on crop size
    x0, y0, x1, y1 = rec.bbox
    corners = sample_corners(x1 - x0, y1 - y0, config.patches_per_annotation,
                             config.patch_size, seed)
    return Provenance(rec.image_id, rec.bbox, seed, tuple(corners))


def _split_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"split:{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def split(annotations: list[EmbeddedAnnotation],
          spec: SplitSpec) -> tuple[list[EmbeddedAnnotation], list[EmbeddedAnnotation]]:
    """Disjoint per-class train/test samples, uniform without replacement.

    Deterministic under the spec seed regardless of class iteration order;
    raises InsufficientClassError naming the first class (alphabetically)
    that cannot supply train + test annotations.
    """
    by_label: dict[str, list[EmbeddedAnnotation]] = {}
    for ann in annotations:
        by_label.setdefault(ann.label, []).append(ann)

    train: list[EmbeddedAnnotation] = []
    test: list[EmbeddedAnnotation] = []
    need = spec.train + spec.test
    for label in sorted(by_label):
        items = by_label[label]
        if len(items) < need:
            raise InsufficientClassError(
                f"class {label!r} has {len(items)} annotations, need {need}"
            )
        rng = np.random.default_rng(_split_seed(spec.seed, label))
        perm = rng.permutation(len(items))
        train.extend(items[i] for i in perm[: spec.train])
        test.extend(items[i] for i in perm[spec.train: need])
    return train, test
