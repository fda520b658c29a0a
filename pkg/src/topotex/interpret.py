"""Reading the classifier back in landscape space.

The separating plane found in 3-D lifts to the hyperplane of all
embedding-space points that project onto it. Walking along that
hyperplane's normal line through the data centroid, out to the farthest
scalar projection attained by any data point, yields one synthetic
embedding per class side. Reshaped into curves these "virtual landscapes"
summarize what the classifier considers maximally class-like, and sit
next to the most extreme real annotation of each class for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import PcaModel, SvmModel, project
from .errors import DomainError
from .landscapes import LandscapeCurves, LandscapeEmbedding, vector_to_landscape
from .pipeline import EmbeddedAnnotation


@dataclass(frozen=True, eq=False)
class VirtualPoint:
    """A non-data point of embedding space representing one class side.

    ``offset`` is the signed multiple of the unit normal from the data
    centroid. Constructed only through virtual_landscape, which verifies
    the point projects strictly to its declared side.
    """

    vector: np.ndarray
    side: str
    offset: float


def lift_plane(pca: PcaModel, svm: SvmModel) -> tuple[np.ndarray, float]:
    """Unit normal and offset of the lifted hyperplane in embedding space.

    The lifted plane is {v : w . project(v) = b}; equivalently n . v =
    offset with n the normalized pull-back of w through the components.
    """
    direction = pca.components.T @ svm.w
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise ValueError("plane normal vanishes after lifting")
    n = direction / norm
    offset = (svm.b + float(svm.w @ (pca.components @ pca.mean))) / norm
    return n, offset


def _stack(data) -> np.ndarray:
    rows = [d.values if isinstance(d, LandscapeEmbedding) else np.asarray(d, dtype=float)
            for d in data]
    if not rows:
        raise ValueError("need at least one embedding")
    return np.vstack(rows)


def virtual_landscape(pca: PcaModel, svm: SvmModel, data, side: str,
                      k: int = 5, grid=None) -> tuple[VirtualPoint, LandscapeCurves]:
    """Virtual point and curves at the outer extent of the data cloud.

    ``data`` is the pair's full set of embeddings; the chosen offset along
    the lifted normal is the largest (positive side) or smallest scalar
    projection among them, measured from their centroid.
    """
    if side not in (svm.class_pos, svm.class_neg):
        raise ValueError(f"side must be {svm.class_pos!r} or {svm.class_neg!r}")
    X = _stack(data)
    n, _ = lift_plane(pca, svm)
    mu = X.mean(axis=0)
    s = (X - mu) @ n
    offset = float(s.max()) if side == svm.class_pos else float(s.min())
    vector = mu + offset * n
    decision = float(svm.decision(project(pca, vector)))
    want_positive = side == svm.class_pos
    if (decision > 0) != want_positive:
        raise DomainError(
            f"virtual point for {side!r} lands on the wrong side of the plane "
            f"(decision {decision:.3g}); the classes do not separate along the normal"
        )
    if grid is None and isinstance(data[0], LandscapeEmbedding):
        grid = data[0].grid
    curves = vector_to_landscape(vector, k=k, grid=grid)
    return VirtualPoint(vector, side, offset), curves


@dataclass(frozen=True)
class ExtremeExample:
    annotation: EmbeddedAnnotation
    signed_distance: float


def extreme_examples(svm: SvmModel, pca: PcaModel,
                     annotations: list[EmbeddedAnnotation]) -> dict[str, ExtremeExample]:
    """The annotation farthest from the plane on each class's own side.

    Distances share evaluate()'s formula: (w . x - b) / |w| on projected
    points. Positive-class annotations compete on the largest distance,
    negative-class on the smallest.
    """
    sides = {svm.class_pos: None, svm.class_neg: None}
    for ann in annotations:
        if ann.label not in sides:
            continue
        dist = float(svm.signed_distance(project(pca, ann.embedding.values)))
        best = sides[ann.label]
        better = (
            best is None
            or (ann.label == svm.class_pos and dist > best.signed_distance)
            or (ann.label == svm.class_neg and dist < best.signed_distance)
        )
        if better:
            sides[ann.label] = ExtremeExample(ann, dist)
    for label, found in sides.items():
        if found is None:
            raise DomainError(f"no annotations labeled {label!r} present")
    return sides
