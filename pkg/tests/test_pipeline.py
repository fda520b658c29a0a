import json
import logging

import numpy as np
import pytest

from topotex import (GrayImage, InsufficientClassError, PipelineConfig,
                     SplitSpec, ingest, split, write_pgm)
from topotex.pipeline import EmbeddingCache, embed_annotation

from conftest import write_texture_manifest


def write_manifest(tmp_path, entries):
    path = tmp_path / "manifest.jsonl"
    path.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    return path


def constant_image(tmp_path, name="flat.pgm", size=96, value=120):
    img = GrayImage(np.full((size, size), value, dtype=np.uint8))
    write_pgm(img, tmp_path / name)
    return name


SMALL = PipelineConfig(patch_size=16, patches_per_annotation=3, samples=50, seed=1)


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = PipelineConfig(patch_size=32, seed=9, cache_dir="x")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_json_dict()))
        assert PipelineConfig.load(path) == cfg

    def test_fingerprint_tracks_embedding_fields(self):
        base = PipelineConfig()
        assert base.fingerprint() == PipelineConfig().fingerprint()
        assert base.fingerprint() != PipelineConfig(seed=1).fingerprint()
        assert base.fingerprint() != PipelineConfig(patch_size=64).fingerprint()
        # cache location must not change keys
        assert base.fingerprint() == PipelineConfig(cache_dir="y").fingerprint()

    def test_unknown_keys_rejected(self):
        with pytest.raises(Exception):
            PipelineConfig.from_json_dict({"patchsize": 3})


class TestIngest:
    def test_constant_annotation_embeds_to_zero(self, tmp_path):
        name = constant_image(tmp_path)
        manifest = write_manifest(tmp_path, [
            {"image": name, "bbox": [0, 0, 96, 96], "label": "flat"}])
        config = PipelineConfig(seed=3)
        result = ingest(manifest, config)
        assert result.report.processed == 1
        ann = result.annotations[0]
        assert ann.label == "flat"
        assert np.all(ann.embedding.values == 0.0)
        assert len(ann.provenance.corners) == 6

    def test_rerun_hits_cache_and_is_bit_identical(self, tmp_path):
        manifest = write_texture_manifest(tmp_path / "data", n_per_class=2, size=40)
        config = PipelineConfig(patch_size=32, patches_per_annotation=2,
                                seed=5, cache_dir=str(tmp_path / "cache"))
        first = ingest(manifest, config)
        second = ingest(manifest, config)
        assert first.report.cache_hits == 0
        assert second.report.cache_hits == 4
        for a, b in zip(first.annotations, second.annotations):
            assert a.id == b.id
            assert np.array_equal(a.embedding.values, b.embedding.values)
            assert a.provenance == b.provenance

    def test_undersized_annotation_skipped_with_warning(self, tmp_path, caplog):
        name = constant_image(tmp_path, size=96)
        manifest = write_manifest(tmp_path, [
            {"image": name, "bbox": [0, 0, 50, 96], "label": "thin"}])
        with caplog.at_level(logging.WARNING, logger="topotex.pipeline"):
            result = ingest(manifest, PipelineConfig())
        assert result.report.processed == 0
        assert len(result.report.skipped) == 1
        assert any("smaller than patch size" in r.message for r in caplog.records)

    def test_unreadable_image_collected_not_fatal(self, tmp_path):
        name = constant_image(tmp_path)
        manifest = write_manifest(tmp_path, [
            {"image": "missing.pgm", "bbox": [0, 0, 96, 96], "label": "a"},
            {"image": name, "bbox": [0, 0, 96, 96], "label": "b"}])
        result = ingest(manifest, PipelineConfig())
        assert result.report.processed == 1
        assert len(result.report.failed) == 1
        assert result.report.failed[0][0] == "missing.pgm"

    def test_corrupt_image_collected_not_fatal(self, tmp_path):
        (tmp_path / "bad.pgm").write_bytes(b"not an image at all")
        manifest = write_manifest(tmp_path, [
            {"image": "bad.pgm", "bbox": [0, 0, 96, 96], "label": "a"}])
        result = ingest(manifest, PipelineConfig())
        assert result.report.processed == 0
        assert len(result.report.failed) == 1

    def test_parallel_equals_serial(self, tmp_path):
        manifest = write_texture_manifest(tmp_path / "data", n_per_class=3, size=40)
        config = PipelineConfig(patch_size=32, patches_per_annotation=2, seed=7)
        serial = ingest(manifest, config, jobs=1)
        parallel = ingest(manifest, config, jobs=2)
        assert len(serial.annotations) == len(parallel.annotations) == 6
        for a, b in zip(serial.annotations, parallel.annotations):
            assert a.id == b.id and a.label == b.label
            assert np.array_equal(a.embedding.values, b.embedding.values)

    def test_manifest_order_does_not_change_values(self, tmp_path):
        data = tmp_path / "data"
        manifest = write_texture_manifest(data, n_per_class=2, size=40)
        lines = manifest.read_text().strip().splitlines()
        reversed_manifest = data / "reversed.jsonl"
        reversed_manifest.write_text("\n".join(reversed(lines)) + "\n")
        config = PipelineConfig(patch_size=32, patches_per_annotation=2, seed=9)
        fwd = {a.id: a.embedding.values for a in ingest(manifest, config).annotations}
        rev = {a.id: a.embedding.values for a in ingest(reversed_manifest, config).annotations}
        assert fwd.keys() == rev.keys()
        assert all(np.array_equal(fwd[k], rev[k]) for k in fwd)

    def test_embed_annotation_deterministic(self, tmp_path):
        from topotex.image_io import AnnotationRecord
        name = constant_image(tmp_path, value=60)
        data = (tmp_path / name).read_bytes()
        rec = AnnotationRecord(name, (0, 0, 96, 96), "flat")
        v1, p1 = embed_annotation(data, rec, PipelineConfig(seed=2))
        v2, p2 = embed_annotation(data, rec, PipelineConfig(seed=2))
        assert np.array_equal(v1, v2) and p1 == p2


class TestCache:
    def test_round_trip(self, tmp_path):
        cache = EmbeddingCache(tmp_path / "c")
        v = np.arange(10, dtype=float)
        cache.put("k1", v)
        cache.put("k2", v * 2)
        cache.flush()
        reopened = EmbeddingCache(tmp_path / "c")
        assert np.array_equal(reopened.get("k1"), v)
        assert np.array_equal(reopened.get("k2"), v * 2)
        assert reopened.get("nope") is None

    def test_put_is_idempotent(self, tmp_path):
        cache = EmbeddingCache(tmp_path / "c")
        v = np.ones(4)
        cache.put("k", v)
        size_before = cache.bin_path.stat().st_size
        cache.put("k", v)
        assert cache.bin_path.stat().st_size == size_before


def _fake_annotations(n, label, start=0):
    from topotex.landscapes import LandscapeEmbedding, LandscapeGrid
    from topotex.pipeline import EmbeddedAnnotation, Provenance
    grid = LandscapeGrid(n=4)
    out = []
    for i in range(n):
        emb = LandscapeEmbedding(np.zeros(2 * 5 * 4), grid=grid)
        prov = Provenance(f"{label}_{i}.png", (0, 0, 10, 10), 0, ((0, 0),))
        out.append(EmbeddedAnnotation(f"{label}{start + i:04d}", label, emb, prov))
    return out


class TestSplit:
    def test_default_counts(self):
        data = _fake_annotations(550, "sugar") + _fake_annotations(550, "flowers")
        train, test = split(data, SplitSpec(seed=1))
        assert len(train) == 700 and len(test) == 400
        train_ids = {a.id for a in train}
        test_ids = {a.id for a in test}
        assert not train_ids & test_ids
        for label in ("sugar", "flowers"):
            assert sum(1 for a in train if a.label == label) == 350
            assert sum(1 for a in test if a.label == label) == 200

    def test_same_seed_same_split(self):
        data = _fake_annotations(30, "a") + _fake_annotations(30, "b")
        spec = SplitSpec(train=10, test=5, seed=4)
        t1 = split(data, spec)
        t2 = split(data, spec)
        assert [a.id for a in t1[0]] == [a.id for a in t2[0]]
        assert [a.id for a in t1[1]] == [a.id for a in t2[1]]

    def test_different_seed_different_split(self):
        data = _fake_annotations(30, "a") + _fake_annotations(30, "b")
        t1 = split(data, SplitSpec(train=10, test=5, seed=1))
        t2 = split(data, SplitSpec(train=10, test=5, seed=2))
        assert [a.id for a in t1[0]] != [a.id for a in t2[0]]

    def test_insufficient_class_named(self):
        data = _fake_annotations(100, "rare") + _fake_annotations(600, "common")
        with pytest.raises(InsufficientClassError, match="rare"):
            split(data, SplitSpec())
