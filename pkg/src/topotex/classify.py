"""Dimensionality reduction and pairwise linear classification.

PCA is a plain mean-centered SVD fit on training embeddings only. The SVM
is a soft-margin linear machine trained in the projected 3-D space; its
solver is a deterministic dual coordinate scheme (always updating the
maximal violating pair, with a fixed iteration budget and tolerance), so
refitting on the same data reproduces the same plane bit for bit. Speed
is irrelevant at a few hundred points in three dimensions; determinism
and a checkable objective are what matter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import RankError, SingleClassError

_ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (n_components, dim), orthonormal rows
    explained_variance_ratio: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        gram = comps @ comps.T
        if not np.allclose(gram, np.eye(comps.shape[0]), atol=_ORTHO_TOL):
            raise ValueError("components must be pairwise orthonormal")
        evr = np.asarray(self.explained_variance_ratio, dtype=float)
        if np.any(np.diff(evr) > 1e-12) or evr.sum() > 1.0 + 1e-9:
            raise ValueError("explained variance ratios must be non-increasing with sum <= 1")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fit_pca(X: np.ndarray, n_components: int = 3) -> PcaModel:
    """Mean-centered SVD; components are the top right-singular vectors.

    Sign convention: the largest-magnitude entry of each component is made
    positive, so refits on permuted rows agree exactly.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < n_components + 1:
        raise ValueError(f"need at least {n_components + 1} rows, got {X.shape}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] <= 1e-12 * max(1.0, float(np.abs(X).max())):
        raise RankError("input rows are all identical; nothing to decompose")
    comps = vt[:n_components].copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    evr = s[:n_components] ** 2 / np.sum(s ** 2)
    return PcaModel(mean, comps, evr)


def project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """components @ (x - mean); accepts one vector or a stack of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.mean.size:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} != {model.mean.size}")
    return (x - model.mean) @ model.components.T


@dataclass(frozen=True, eq=False)
class SvmModel:
    w: np.ndarray
    b: float
    C: float
    class_pos: str
    class_neg: str

    def __post_init__(self):
        if float(np.linalg.norm(self.w)) == 0.0:
            raise ValueError("separating plane must have a nonzero normal")
        if self.C <= 0:
            raise ValueError("C must be positive")

    def decision(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.w - self.b

    def predict(self, x: np.ndarray) -> np.ndarray:
        d = np.atleast_1d(self.decision(x))
        return np.where(d > 0, self.class_pos, self.class_neg)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return self.decision(x) / float(np.linalg.norm(self.w))


def hinge_objective(points: np.ndarray, y: np.ndarray, C: float,
                    w: np.ndarray, b: float) -> float:
    margins = 1.0 - y * (points @ w - b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, margins).sum())


def fit_svm(points: np.ndarray, labels, class_pos: str, class_neg: str,
            C: float = 1.0, tol: float = 1e-10, max_iter: int = 200_000) -> SvmModel:
    """Soft-margin linear SVM minimizing (1/2)|w|^2 + C * sum hinge.

    Solved in the dual: repeatedly pick the maximal violating pair of
    coordinates (ties to the lowest index) and take the exact second-order
    step, until the KKT violation drops below tol or the budget runs out.
    Decision is sign(w.x - b), positive meaning class_pos.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    y = np.where(labels == class_pos, 1.0, -1.0)
    known = (labels == class_pos) | (labels == class_neg)
    if not np.all(known):
        raise ValueError(f"unknown labels present: {sorted(set(labels[~known]))}")
    if not (np.any(y > 0) and np.any(y < 0)):
        missing = class_neg if np.all(y > 0) else class_pos
        raise SingleClassError(f"no points labeled {missing!r}")

    n = points.shape[0]
    gram = points @ points.T
    q = (y[:, None] * y[None, :]) * gram
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of (1/2) a'Qa - sum(a)
    eps = 1e-12
    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        down = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
        if not up.any() or not down.any():
            break
        up_idx = np.flatnonzero(up)
        down_idx = np.flatnonzero(down)
        i = up_idx[np.argmax(yg[up_idx])]
        j = down_idx[np.argmin(yg[down_idx])]
        if yg[i] - yg[j] <= tol:
            break
        quad = max(gram[i, i] + gram[j, j] - 2.0 * gram[i, j], 1e-18)
        step = (yg[i] - yg[j]) / quad
        if y[i] > 0:
            step = min(step, C - alpha[i])
        else:
            step = min(step, alpha[i])
        if y[j] > 0:
            step = min(step, alpha[j])
        else:
            step = min(step, C - alpha[j])
        d_i = step * y[i]
        d_j = -step * y[j]
        alpha[i] += d_i
        alpha[j] += d_j
        grad += q[:, i] * d_i + q[:, j] * d_j

    w = points.T @ (alpha * y)
    fx = points @ w
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        b = float(np.mean(fx[free] - y[free]))
    else:
        # all multipliers at bounds: b is any value in the KKT interval
        lo, hi = -np.inf, np.inf
        for m in range(n):
            v = fx[m] - y[m]
            at_zero = alpha[m] <= eps
            at_c = alpha[m] >= C - eps
            if (y[m] > 0 and at_c) or (y[m] < 0 and at_zero):
                lo = max(lo, v)
            if (y[m] > 0 and at_zero) or (y[m] < 0 and at_c):
                hi = min(hi, v)
        if not np.isfinite(lo):
            lo = hi
        if not np.isfinite(hi):
            hi = lo
        b = float((lo + hi) / 2.0)
    return SvmModel(w, b, float(C), class_pos, class_neg)


@dataclass
class EvalResult:
    accuracy: float
    per_class: dict[str, dict[str, int]]
    records: list[tuple[str, str, str, float]] = field(default_factory=list)
    # records: (id, label, predicted, signed_distance)


def evaluate(model: SvmModel, points: np.ndarray, labels,
             ids: list[str] | None = None) -> EvalResult:
    points = np.asarray(points, dtype=float)
    labels = list(labels)
    if not labels:
        raise ValueError("test set is empty")
    if ids is None:
        ids = [str(i) for i in range(len(labels))]
    predicted = model.predict(points)
    distances = model.signed_distance(points)
    per_class: dict[str, dict[str, int]] = {}
    correct = 0
    records = []
    for pid, label, pred, dist in zip(ids, labels, predicted, np.atleast_1d(distances)):
        stats = per_class.setdefault(label, {"correct": 0, "total": 0})
        stats["total"] += 1
        if pred == label:
            stats["correct"] += 1
            correct += 1
        records.append((pid, label, str(pred), float(dist)))
    return EvalResult(correct / len(labels), per_class, records)


def save_models(path: str | Path, pca: PcaModel, svm: SvmModel,
                meta: dict | None = None) -> None:
    obj = {
        "pca": {
            "mean": pca.mean.tolist(),
            "components": pca.components.tolist(),
            "evr": pca.explained_variance_ratio.tolist(),
        },
        "svm": {
            "w": svm.w.tolist(),
            "b": svm.b,
            "C": svm.C,
            "classes": [svm.class_pos, svm.class_neg],
        },
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n")


def load_models(path: str | Path) -> tuple[PcaModel, SvmModel, dict]:
    obj = json.loads(Path(path).read_text())
    pca = PcaModel(
        np.asarray(obj["pca"]["mean"], dtype=float),
        np.asarray(obj["pca"]["components"], dtype=float),
        np.asarray(obj["pca"]["evr"], dtype=float),
    )
    svm = SvmModel(
        np.asarray(obj["svm"]["w"], dtype=float),
        float(obj["svm"]["b"]),
        float(obj["svm"]["C"]),
        obj["svm"]["classes"][0],
        obj["svm"]["classes"][1],
    )
    return pca, svm, obj.get("meta", {})
