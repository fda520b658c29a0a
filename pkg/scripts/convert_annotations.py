#!/usr/bin/env python3
"""Best-effort adapter from a crowd-sourced annotation dump to the JSONL
manifest format this package ingests.

Input: a CSV with one annotation per row. The column layout of public
dumps varies, so the important columns are configurable; by default the
script looks for (image_name or image), a label column, and either corner
columns (x0, y0, x1, y1) or x/y/width/height. Output lines look like

    {"image": "images/foo.png", "bbox": [x0, y0, x1, y1], "label": "sugar"}

Usage:
    python convert_annotations.py annotations.csv manifest.jsonl \
        --image-dir images/ --label-column label
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


def pick(row: dict, *names: str):
    for name in names:
        if name in row and row[name] not in ("", None):
            return row[name]
    return None


def to_bbox(row: dict) -> tuple[int, int, int, int] | None:
    corners = [pick(row, n) for n in ("x0", "y0", "x1", "y1")]
    if all(v is not None for v in corners):
        x0, y0, x1, y1 = (int(float(v)) for v in corners)
        return x0, y0, x1, y1
    xywh = [pick(row, "x", "xmin"), pick(row, "y", "ymin"),
            pick(row, "width", "w"), pick(row, "height", "h")]
    if all(v is not None for v in xywh):
        x, y, w, h = (int(float(v)) for v in xywh)
        return x, y, x + w, y + h
    return None


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv_path", type=Path)
    ap.add_argument("manifest_path", type=Path)
    ap.add_argument("--image-dir", default="", help="prefix joined to image names")
    ap.add_argument("--image-column", default=None)
    ap.add_argument("--label-column", default=None)
    args = ap.parse_args()

    written = dropped = 0
    with open(args.csv_path, newline="") as fh, open(args.manifest_path, "w") as out:
        for row in csv.DictReader(fh):
            image = (row.get(args.image_column) if args.image_column
                     else pick(row, "image_name", "image", "file", "filename"))
            label = (row.get(args.label_column) if args.label_column
                     else pick(row, "label", "class", "tool_label", "pattern"))
            bbox = to_bbox(row)
            if not image or not label or bbox is None:
                dropped += 1
                continue
            x0, y0, x1, y1 = bbox
            if x0 >= x1 or y0 >= y1:
                dropped += 1
                continue
            path = str(Path(args.image_dir) / image) if args.image_dir else image
            out.write(json.dumps({"image": path, "bbox": [x0, y0, x1, y1],
                                  "label": str(label).strip().lower()}) + "\n")
            written += 1
    print(f"wrote {written} records to {args.manifest_path} ({dropped} rows dropped)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
