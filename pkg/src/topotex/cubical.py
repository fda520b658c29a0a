"""Cubical persistent homology of grayscale images under decreasing
intensity cutoffs.

The complex uses the vertex construction: every pixel is a vertex, edges
join 4-adjacent pixels, and each 2x2 pixel block carries a unit square.
A cell enters the bright-region complex once every pixel it touches is at
least as bright as the cutoff, so its internal filtration value is
t = 255 - min(vertex intensities), and the sweep of the cutoff downward
becomes an ordinary increasing (sublevel) filtration in t. All bookkeeping
runs in t; intensities reappear only on the Barcode boundary.

Dimension 0 is paired by union-find with the elder rule (on a merge the
component with the younger birth dies; ties survive to the smaller linear
vertex index). Dimension 1 is paired by column reduction of the square
boundary matrix over Z/2, with cells ordered by (t, dim, index). Because
the 0-dimensional pairs already consume every vertex pivot, the edge
columns never need reducing at all; only square columns are processed
(twist/clearing). Columns are kept as sparse sets of edge ranks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image_io import GrayImage


@dataclass(frozen=True, order=True)
class PersistenceBar:
    """One homological feature; intensities, superlevel convention.

    ``death_intensity`` is None for a feature that survives the whole
    sweep. Finite bars always have birth_intensity > death_intensity.
    """

    dim: int
    birth_intensity: int
    death_intensity: int | None

    def __post_init__(self):
        if self.dim not in (0, 1):
            raise ValueError(f"dim must be 0 or 1, got {self.dim}")
        if not (0 <= self.birth_intensity <= 255):
            raise ValueError(f"birth {self.birth_intensity} outside [0, 255]")
        if self.death_intensity is None:
            if self.dim == 1:
                raise ValueError("dimension-1 bars are always finite")
        else:
            if not (0 <= self.death_intensity <= 255):
                raise ValueError(f"death {self.death_intensity} outside [0, 255]")
            if self.death_intensity >= self.birth_intensity:
                raise ValueError(
                    f"finite bar needs birth > death, got "
                    f"({self.birth_intensity}, {self.death_intensity})"
                )

    @property
    def infinite(self) -> bool:
        return self.death_intensity is None


def _bar_sort_key(bar: PersistenceBar):
    death = -1 if bar.death_intensity is None else bar.death_intensity
    return (bar.dim, -bar.birth_intensity, death)


@dataclass(frozen=True)
class Barcode:
    """All bars of one image, together with its pixel dimensions."""

    width: int
    height: int
    bars: tuple[PersistenceBar, ...]

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(sorted(self.bars, key=_bar_sort_key)))

    def bars_of_dim(self, dim: int) -> tuple[PersistenceBar, ...]:
        return tuple(b for b in self.bars if b.dim == dim)

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "bars": [
                {"dim": b.dim, "birth": b.birth_intensity, "death": b.death_intensity}
                for b in self.bars
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Barcode":
        bars = tuple(
            PersistenceBar(int(b["dim"]), int(b["birth"]),
                           None if b["death"] is None else int(b["death"]))
            for b in obj["bars"]
        )
        return cls(int(obj["width"]), int(obj["height"]), bars)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Barcode":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class CubicalComplex:
    """Filtered cubical complex of an image in internal parameter t.

    vertex_t has shape (height, width); h_edge_t (height, width-1);
    v_edge_t (height-1, width); square_t (height-1, width-1). Every face
    value is <= every coface value by the max-of-vertices rule.
    """

    width: int
    height: int
    vertex_t: np.ndarray
    h_edge_t: np.ndarray
    v_edge_t: np.ndarray
    square_t: np.ndarray

    @property
    def vertex_count(self) -> int:
        return self.width * self.height

    @property
    def edge_count(self) -> int:
        return self.h_edge_t.size + self.v_edge_t.size

    @property
    def square_count(self) -> int:
        return self.square_t.size


def _derived_cells(vertex_t: np.ndarray):
    h_edge = np.maximum(vertex_t[:, :-1], vertex_t[:, 1:])
    v_edge = np.maximum(vertex_t[:-1, :], vertex_t[1:, :])
    square = np.maximum(np.maximum(vertex_t[:-1, :-1], vertex_t[:-1, 1:]),
                        np.maximum(vertex_t[1:, :-1], vertex_t[1:, 1:]))
    return h_edge, v_edge, square


def build_superlevel_filtration(img: GrayImage) -> CubicalComplex:
    """Complex whose t values grow as the intensity cutoff sweeps down."""
    vertex_t = 255 - img.pixels.astype(np.int32)
    h_edge, v_edge, square = _derived_cells(vertex_t)
    return CubicalComplex(img.width, img.height, vertex_t, h_edge, v_edge, square)


def _pairs_from_vertex_values(vertex_t: np.ndarray):
    """Persistence pairs of the sublevel filtration of a vertex-valued grid.

    Returns (bars0, bars1) in t coordinates: bars0 as (birth, death_or_None),
    bars1 as (birth, death). Zero-length pairs are dropped.
    """
    h, w = vertex_t.shape
    n = h * w
    tf = vertex_t.ravel()

    # dimension 0: union-find in (t, vertex index) order. Each edge is
    # handled exactly once, at its later endpoint, which is when it enters.
    order = np.argsort(tf, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)

    parent = list(range(n))
    birth_t = [0] * n
    birth_v = [0] * n
    bars0: list[tuple[int, int | None]] = []
    tf_l = tf.tolist()
    pos_l = pos.tolist()

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for v in order.tolist():
        pv = pos_l[v]
        tv = tf_l[v]
        x = v % w
        roots = set()
        if x > 0 and pos_l[v - 1] < pv:
            roots.add(find(v - 1))
        if x < w - 1 and pos_l[v + 1] < pv:
            roots.add(find(v + 1))
        if v >= w and pos_l[v - w] < pv:
            roots.add(find(v - w))
        if v < n - w and pos_l[v + w] < pv:
            roots.add(find(v + w))
        if not roots:
            birth_t[v] = tv
            birth_v[v] = v
            continue
        survivor = min(roots, key=lambda r: (birth_t[r], birth_v[r]))
        for r in roots:
            if r == survivor:
                continue
            if birth_t[r] < tv:
                bars0.append((birth_t[r], tv))
            parent[r] = survivor
        parent[v] = survivor

    for r in {find(v) for v in range(n)}:
        bars0.append((birth_t[r], None))

    # dimension 1: reduce square boundary columns over edge-rank rows.
    bars1: list[tuple[int, int]] = []
    if w > 1 and h > 1:
        h_edge, v_edge, square = _derived_cells(vertex_t)
        ht = h_edge.ravel()
        vt = v_edge.ravel()
        nh = ht.size
        et = np.concatenate([ht, vt])
        eorder = np.argsort(et, kind="stable")
        erank = np.empty(et.size, dtype=np.int64)
        erank[eorder] = np.arange(et.size)
        et_by_rank = et[eorder].tolist()

        sq = square.ravel()
        sorder = np.argsort(sq, kind="stable")

        nsq = sq.size
        ys, xs = np.divmod(np.arange(nsq), w - 1)
        top = erank[ys * (w - 1) + xs].tolist()
        bot = erank[(ys + 1) * (w - 1) + xs].tolist()
        left = erank[nh + ys * w + xs].tolist()
        right = erank[nh + ys * w + xs + 1].tolist()
        sq_l = sq.tolist()

        pivot_owner: dict[int, set[int]] = {}
        for s in sorder.tolist():
            col = {top[s], bot[s], left[s], right[s]}
            while col:
                p = max(col)
                owner = pivot_owner.get(p)
                if owner is None:
                    pivot_owner[p] = col
                    bt = et_by_rank[p]
                    dt = sq_l[s]
                    if bt < dt:
                        bars1.append((bt, dt))
                    break
                col ^= owner
            # a square column can never vanish: the rectangle has no 2-cycles

    return bars0, bars1


def compute_persistence(cx: CubicalComplex) -> Barcode:
    """Barcode of the superlevelset filtration, in intensity coordinates."""
    bars0, bars1 = _pairs_from_vertex_values(cx.vertex_t)
    bars = [
        PersistenceBar(0, int(255 - bt), None if dt is None else int(255 - dt))
        for bt, dt in bars0
    ]
    bars += [PersistenceBar(1, int(255 - bt), int(255 - dt)) for bt, dt in bars1]
    return Barcode(cx.width, cx.height, tuple(bars))


def superlevel_barcode(img: GrayImage) -> Barcode:
    return compute_persistence(build_superlevel_filtration(img))


def sublevel_bars(img: GrayImage) -> list[tuple[int, int, int | None]]:
    """Bars of the increasing-cutoff filtration (pixels <= cutoff), as
    (dim, birth, death) tuples with birth <= death. Provided so the
    negation relation between the two sweep directions is checkable from
    the public surface."""
    vertex_t = img.pixels.astype(np.int32)
    bars0, bars1 = _pairs_from_vertex_values(vertex_t)
    out = [(0, int(b), None if d is None else int(d)) for b, d in bars0]
    out += [(1, int(b), int(d)) for b, d in bars1]
    return sorted(out, key=lambda t: (t[0], t[1], -1 if t[2] is None else t[2]))


def betti_at(bc: Barcode, cutoff: int) -> tuple[int, int]:
    """Betti numbers of the superlevelset at the given intensity cutoff."""
    if not (0 <= cutoff <= 255):
        raise ValueError(f"cutoff {cutoff} outside [0, 255]")
    b0 = b1 = 0
    for bar in bc.bars:
        alive = bar.birth_intensity >= cutoff and (
            bar.death_intensity is None or bar.death_intensity < cutoff
        )
        if alive:
            if bar.dim == 0:
                b0 += 1
            else:
                b1 += 1
    return b0, b1


def betti_curves(bc: Barcode, cutoffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized betti_at over many cutoffs at once (test support)."""
    cutoffs = np.asarray(cutoffs)
    b0 = np.zeros(cutoffs.shape, dtype=np.int64)
    b1 = np.zeros(cutoffs.shape, dtype=np.int64)
    for bar in bc.bars:
        death = -1 if bar.death_intensity is None else bar.death_intensity
        alive = (bar.birth_intensity >= cutoffs) & (death < cutoffs)
        if bar.dim == 0:
            b0 += alive
        else:
            b1 += alive
    return b0, b1


def brute_force_betti(img: GrayImage, cutoff: int) -> tuple[int, int]:
    """Betti numbers straight from the binary mask, with no persistence
    machinery: components by union-find over 4-adjacency, then
    beta1 = beta0 - (V - E + F) since nothing lives above dimension 1."""
    mask = img.pixels >= cutoff
    v_count = int(mask.sum())
    if v_count == 0:
        return 0, 0
    h_adj = mask[:, :-1] & mask[:, 1:]
    v_adj = mask[:-1, :] & mask[1:, :]
    e_count = int(h_adj.sum()) + int(v_adj.sum())
    f_count = int((mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1] & mask[1:, 1:]).sum())

    idx = np.full(mask.shape, -1, dtype=np.int64)
    idx[mask] = np.arange(v_count)
    parent = list(range(v_count))

    def find(a: int) -> int:
        r = a
        while parent[r] != r:
            r = parent[r]
        while parent[a] != r:
            parent[a], a = r, parent[a]
        return r

    left = idx[:, :-1][h_adj]
    right = idx[:, 1:][h_adj]
    up = idx[:-1, :][v_adj]
    down = idx[1:, :][v_adj]
    for a, b in zip(np.concatenate([left, up]).tolist(),
                    np.concatenate([right, down]).tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    b0 = len({find(i) for i in range(v_count)})
    b1 = b0 - (v_count - e_count + f_count)
    return b0, b1
