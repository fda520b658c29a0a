"""Batch command-line front end.

Subcommands mirror the workflow: ``persistence`` for one image's barcode,
``embed`` to ingest a manifest into cached landscape embeddings,
``train`` / ``evaluate`` for one class pair, and ``interpret`` to emit the
virtual-landscape figures for a trained pair.

Exit codes: 0 success, 1 domain error (bad data), 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classify, interpret, svgplot
from .cubical import superlevel_barcode
from .errors import DomainError
from .image_io import crop, load_image
from .landscapes import LandscapeCurves, LandscapeEmbedding
from .pipeline import (EmbeddedAnnotation, EmbeddingCache, PipelineConfig,
                       Provenance, SplitSpec, ingest, split)


@dataclass
class RunConfig:
    """Validated per-invocation settings shared by every subcommand."""

    subcommand: str
    manifest: Path | None = None
    config: Path | None = None
    seed: int | None = None
    out: Path | None = None
    pair: tuple[str, str] | None = None

    def __post_init__(self):
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            subcommand=args.subcommand,
            manifest=getattr(args, "manifest", None),
            config=getattr(args, "config", None),
            seed=getattr(args, "seed", None),
            out=getattr(args, "out", None),
            pair=getattr(args, "pair", None),
        )


def _parse_pair(s: str) -> tuple[str, str]:
    parts = s.split(":")
    if len(parts) != 2 or not parts[0] or not parts[1] or parts[0] == parts[1]:
        raise argparse.ArgumentTypeError("pair must look like CLASSA:CLASSB")
    return parts[0], parts[1]


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "-", label)


def _pair_tag(pair: tuple[str, str]) -> str:
    return f"{_slug(pair[0])}_vs_{_slug(pair[1])}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topotex",
                                description="Topological texture classification pipeline.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("persistence", help="barcode of one image")
    sp.add_argument("image", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--plot", action="store_true")
    sp.add_argument("--reproducible", action="store_true")

    se = sub.add_parser("embed", help="ingest a manifest into embeddings")
    se.add_argument("--manifest", type=Path, required=True)
    se.add_argument("--config", type=Path)
    se.add_argument("--seed", type=int)
    se.add_argument("--jobs", type=int, default=1)
    se.add_argument("--cache", type=Path)
    se.add_argument("--out", type=Path, required=True)

    st = sub.add_parser("train", help="fit PCA + SVM for one class pair")
    st.add_argument("--data", type=Path, required=True)
    st.add_argument("--pair", type=_parse_pair, required=True)
    st.add_argument("--seed", type=int, required=True)
    st.add_argument("--train-count", type=int, default=350)
    st.add_argument("--test-count", type=int, default=200)
    st.add_argument("--svm-c", type=float, default=1.0)
    st.add_argument("--out", type=Path, required=True)

    sv = sub.add_parser("evaluate", help="evaluate a trained pair on its test split")
    sv.add_argument("--data", type=Path, required=True)
    sv.add_argument("--model", type=Path, required=True)
    sv.add_argument("--out", type=Path, required=True)
    sv.add_argument("--reproducible", action="store_true")

    si = sub.add_parser("interpret", help="virtual and extreme landscape figures")
    si.add_argument("--data", type=Path, required=True)
    si.add_argument("--model", type=Path, required=True)
    si.add_argument("--out", type=Path, required=True)
    si.add_argument("--reproducible", action="store_true")
    return p


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def cmd_persistence(args) -> int:
    img = load_image(args.image)
    bc = superlevel_barcode(img)
    stem = args.image.stem
    bc.save(args.out / f"{stem}_barcode.json")
    if args.plot:
        (args.out / f"{stem}_barcode.svg").write_text(
            svgplot.barcode_svg(bc, reproducible=args.reproducible))
        (args.out / f"{stem}_diagram.svg").write_text(
            svgplot.diagram_svg(bc, reproducible=args.reproducible))
    print(f"wrote {stem}_barcode.json ({len(bc.bars)} bars)")
    return 0


def cmd_embed(args) -> int:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cache_dir = args.cache or (Path(config.cache_dir) if config.cache_dir
                               else args.out / "cache")
    overrides["cache_dir"] = str(cache_dir)
    config = PipelineConfig(**{**config.to_json_dict(), **overrides})

    result = ingest(args.manifest, config, jobs=max(1, args.jobs))
    dataset = {
        "config": config.to_json_dict(),
        "manifest": str(Path(args.manifest).resolve()),
        "cache_dir": str(Path(cache_dir).resolve()),
        "records": [
            {
                "id": ann.id,
                "label": ann.label,
                "image": ann.provenance.image_id,
                "bbox": list(ann.provenance.bbox),
                "seed": ann.provenance.seed,
                "corners": [list(c) for c in ann.provenance.corners],
            }
            for ann in result.annotations
        ],
        "report": {
            "processed": result.report.processed,
            "cache_hits": result.report.cache_hits,
            "skipped": [[i, list(b), m] for i, b, m in result.report.skipped],
            "failed": [[i, list(b), m] for i, b, m in result.report.failed],
        },
    }
    _write_json(args.out / "dataset.json", dataset)
    r = result.report
    print(f"annotations processed: {r.processed}")
    print(f"cache hits: {r.cache_hits}")
    print(f"skipped: {len(r.skipped)}")
    print(f"failed: {len(r.failed)}")
    for image_id, bbox, msg in r.failed:
        print(f"  failed {image_id} {bbox}: {msg}", file=sys.stderr)
    return 0


def _load_dataset(path: Path) -> tuple[PipelineConfig, dict, list[EmbeddedAnnotation]]:
    obj = json.loads(path.read_text())
    config = PipelineConfig.from_json_dict(obj["config"])
    cache = EmbeddingCache(obj["cache_dir"])
    annotations = []
    for rec in obj["records"]:
        # the dataset id is the cache key prefix; scan once for full keys
        matches = [k for k in cache.index if k.startswith(rec["id"])]
        if len(matches) != 1:
            raise DomainError(
                f"embedding for annotation {rec['id']} not found in cache "
                f"{obj['cache_dir']}; re-run embed"
            )
        values = cache.get(matches[0])
        emb = LandscapeEmbedding(values, grid=config.grid, k=config.k)
        prov = Provenance(rec["image"], tuple(rec["bbox"]), rec["seed"],
                          tuple(tuple(c) for c in rec["corners"]))
        annotations.append(EmbeddedAnnotation(rec["id"], rec["label"], emb, prov))
    return config, obj, annotations


def _pair_annotations(annotations: list[EmbeddedAnnotation],
                      pair: tuple[str, str]) -> list[EmbeddedAnnotation]:
    present = {a.label for a in annotations}
    for cls in pair:
        if cls not in present:
            raise DomainError(f"no embeddings labeled {cls!r}; check the manifest")
    return [a for a in annotations if a.label in pair]


def cmd_train(args) -> int:
    config, _, annotations = _load_dataset(args.data)
    pair = args.pair
    data = _pair_annotations(annotations, pair)
    spec = SplitSpec(train=args.train_count, test=args.test_count, seed=args.seed)
    train_set, test_set = split(data, spec)

    X = np.stack([a.embedding.values for a in train_set])
    pca = classify.fit_pca(X, n_components=3)
    pts = classify.project(pca, X)
    labels = [a.label for a in train_set]
    svm = classify.fit_svm(pts, labels, class_pos=pair[0], class_neg=pair[1],
                           C=args.svm_c)
    meta = {
        "pair": list(pair),
        "seed": args.seed,
        "split": {"train": spec.train, "test": spec.test},
        "train_ids": [a.id for a in train_set],
        "test_ids": [a.id for a in test_set],
        "data": str(Path(args.data).resolve()),
    }
    model_path = args.out / f"model_{_pair_tag(pair)}.json"
    classify.save_models(model_path, pca, svm, meta)
    train_eval = classify.evaluate(svm, pts, labels, ids=[a.id for a in train_set])
    print(f"trained {pair[0]} vs {pair[1]}: {len(train_set)} train annotations, "
          f"train accuracy {100 * train_eval.accuracy:.2f}%")
    print(f"explained variance (3 components): "
          f"{float(pca.explained_variance_ratio.sum()):.4f}")
    print(f"wrote {model_path}")
    return 0


def _annotations_by_id(annotations: list[EmbeddedAnnotation]) -> dict[str, EmbeddedAnnotation]:
    return {a.id: a for a in annotations}


def cmd_evaluate(args) -> int:
    _, _, annotations = _load_dataset(args.data)
    pca, svm, meta = classify.load_models(args.model)
    by_id = _annotations_by_id(annotations)
    try:
        test_set = [by_id[i] for i in meta["test_ids"]]
    except KeyError as exc:
        raise DomainError(f"test annotation {exc} missing from dataset; re-run embed") from exc
    pair = tuple(meta["pair"])
    X = np.stack([a.embedding.values for a in test_set])
    pts = classify.project(pca, X)
    labels = [a.label for a in test_set]
    result = classify.evaluate(svm, pts, labels, ids=[a.id for a in test_set])

    tag = _pair_tag(pair)
    report_path = args.out / f"report_{tag}.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label", "predicted", "signed_distance"])
    for rid, label, pred, dist in result.records:
        writer.writerow([rid, label, pred, repr(dist)])
    report_path.write_text(buf.getvalue())

    summary = {
        "pair": list(pair),
        "count": len(test_set),
        "accuracy": result.accuracy,
        "accuracy_percent": f"{100 * result.accuracy:.2f}%",
        "per_class": result.per_class,
    }
    _write_json(args.out / f"summary_{tag}.json", summary)
    for view in ("pc1-pc2", "pc1-pc3", "pc2-pc3"):
        svg = svgplot.scatter3d_svg(pts, labels, svm.w, svm.b, view=view,
                                    reproducible=args.reproducible,
                                    title=f"{pair[0]} vs {pair[1]} test points ({view})")
        (args.out / f"scatter_{tag}_{view}.svg").write_text(svg)
    print(f"test accuracy {pair[0]} vs {pair[1]}: {summary['accuracy_percent']} "
          f"({len(test_set)} annotations)")
    return 0


def cmd_interpret(args) -> int:
    _, dataset, annotations = _load_dataset(args.data)
    if not Path(args.model).exists():
        raise DomainError(f"model {args.model} not found; run train first")
    pca, svm, meta = classify.load_models(args.model)
    pair = tuple(meta["pair"])
    data = _pair_annotations(annotations, pair)

    embeddings = [a.embedding for a in data]
    extremes = interpret.extreme_examples(svm, pca, data)
    tag = _pair_tag(pair)
    manifest_dir = Path(dataset["manifest"]).parent
    panels = []
    sides_meta = {}
    for side in pair:
        vp, curves = interpret.virtual_landscape(pca, svm, embeddings, side,
                                                 k=data[0].embedding.k)
        ex = extremes[side]
        prov = ex.annotation.provenance
        image_path = Path(prov.image_id)
        if not image_path.is_absolute():
            image_path = manifest_dir / image_path
        region = crop(load_image(image_path), prov.bbox)

        name_img = f"extreme_image_{_slug(side)}.svg"
        name_real = f"extreme_landscape_{_slug(side)}.svg"
        name_virt = f"virtual_landscape_{_slug(side)}.svg"
        (args.out / name_img).write_text(svgplot.image_panel_svg(
            region, title=f"most extreme {side} annotation",
            reproducible=args.reproducible))
        real_curves = LandscapeCurves.from_embedding(ex.annotation.embedding)
        (args.out / name_real).write_text(svgplot.landscape_svg(
            real_curves, title=f"landscape of extreme {side} annotation",
            reproducible=args.reproducible))
        (args.out / name_virt).write_text(svgplot.landscape_svg(
            curves, title=f"virtual {side} landscape",
            reproducible=args.reproducible))
        panels += [name_img, name_real, name_virt]

        sides_meta[side] = {
            "virtual_offset": vp.offset,
            "virtual_decision": float(svm.decision(classify.project(pca, vp.vector))),
            "virtual_curves": curves.to_json_dict(),
            "extreme_id": ex.annotation.id,
            "extreme_signed_distance": ex.signed_distance,
            "extreme_image": prov.image_id,
            "extreme_bbox": list(prov.bbox),
        }
    record = {
        "pair": list(pair),
        "panels": panels,
        "sides": sides_meta,
        "normal_scope": "centroid and extent over all embedded annotations of the pair "
                        "(train and test together)",
    }
    _write_json(args.out / f"interpret_{tag}.json", record)
    print(f"wrote {len(panels)} panels and interpret_{tag}.json")
    return 0


_COMMANDS = {
    "persistence": cmd_persistence,
    "embed": cmd_embed,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "interpret": cmd_interpret,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        RunConfig.from_args(args)  # creates --out, validates common fields
        return _COMMANDS[args.subcommand](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
