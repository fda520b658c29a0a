import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topotex import (Barcode, GrayImage, PersistenceBar, betti_at,
                     brute_force_betti, build_superlevel_filtration,
                     compute_persistence, sublevel_bars, superlevel_barcode)
from topotex.cubical import betti_curves

from conftest import gray


def bar_tuples(bc: Barcode):
    return sorted((b.dim, b.birth_intensity, b.death_intensity) for b in bc.bars
                  if b.death_intensity is not None)


def inf_bars(bc: Barcode):
    return [(b.dim, b.birth_intensity) for b in bc.bars if b.death_intensity is None]


small_images = st.integers(1, 8).flatmap(
    lambda h: st.integers(1, 8).flatmap(
        lambda w: st.lists(st.integers(0, 255), min_size=w * h, max_size=w * h).map(
            lambda vals: gray(np.array(vals).reshape(h, w)))))


class TestFiltration:
    def test_single_pixel(self):
        cx = build_superlevel_filtration(gray([[200]]))
        assert cx.vertex_t.tolist() == [[55]]
        assert cx.edge_count == 0 and cx.square_count == 0

    def test_one_by_two(self):
        cx = build_superlevel_filtration(gray([[200, 10]]))
        assert cx.vertex_t.tolist() == [[55, 245]]
        assert cx.h_edge_t.tolist() == [[245]]
        assert cx.v_edge_t.size == 0

    def test_constant_two_by_two(self):
        cx = build_superlevel_filtration(gray([[0, 0], [0, 0]]))
        cells = ([cx.vertex_t.ravel(), cx.h_edge_t.ravel(),
                  cx.v_edge_t.ravel(), cx.square_t.ravel()])
        assert sum(a.size for a in cells) == 9
        assert all(np.all(a == 255) for a in cells)

    def test_cell_counts(self):
        cx = build_superlevel_filtration(gray(np.zeros((5, 7))))
        w, h = 7, 5
        assert cx.vertex_count == w * h
        assert cx.edge_count == w * (h - 1) + h * (w - 1)
        assert cx.square_count == (w - 1) * (h - 1)

    @given(small_images)
    @settings(max_examples=40)
    def test_faces_enter_no_later_than_cofaces(self, img):
        cx = build_superlevel_filtration(img)
        assert np.all(cx.h_edge_t >= cx.vertex_t[:, :-1])
        assert np.all(cx.h_edge_t >= cx.vertex_t[:, 1:])
        assert np.all(cx.v_edge_t >= cx.vertex_t[:-1, :])
        assert np.all(cx.v_edge_t >= cx.vertex_t[1:, :])
        if cx.square_count:
            assert np.all(cx.square_t >= cx.h_edge_t[:-1, :])
            assert np.all(cx.square_t >= cx.h_edge_t[1:, :])
            assert np.all(cx.square_t >= cx.v_edge_t[:, :-1])
            assert np.all(cx.square_t >= cx.v_edge_t[:, 1:])


class TestWorkedBarcodes:
    def test_constant_image(self):
        bc = superlevel_barcode(gray(np.full((5, 5), 100)))
        assert inf_bars(bc) == [(0, 100)]
        assert bar_tuples(bc) == []

    def test_ring(self, ring_image):
        bc = superlevel_barcode(ring_image)
        assert inf_bars(bc) == [(0, 200)]
        assert bar_tuples(bc) == [(1, 200, 50)]

    def test_two_blob_strip(self, two_blob_strip):
        bc = superlevel_barcode(two_blob_strip)
        assert inf_bars(bc) == [(0, 200)]
        assert bar_tuples(bc) == [(0, 180, 10)]

    def test_zero_length_bars_dropped(self):
        bc = superlevel_barcode(gray([[7, 7, 7]]))
        assert len(bc.bars) == 1 and bc.bars[0].infinite


class TestBettiAt:
    def test_constant_above_cutoff_is_empty(self):
        bc = superlevel_barcode(gray(np.full((5, 5), 100)))
        assert betti_at(bc, 150) == (0, 0)
        assert betti_at(bc, 100) == (1, 0)

    def test_ring_with_open_hole(self, ring_image):
        bc = superlevel_barcode(ring_image)
        assert betti_at(bc, 120) == (1, 1)

    def test_cutoff_range_checked(self, ring_image):
        bc = superlevel_barcode(ring_image)
        with pytest.raises(ValueError):
            betti_at(bc, 256)

    def test_vectorized_matches_scalar(self, ring_image):
        bc = superlevel_barcode(ring_image)
        cutoffs = np.arange(256)
        b0, b1 = betti_curves(bc, cutoffs)
        for c in (0, 49, 50, 51, 120, 200, 201, 255):
            assert (b0[c], b1[c]) == betti_at(bc, c)


class TestBruteForce:
    def test_empty_mask(self):
        assert brute_force_betti(gray(np.full((4, 4), 10)), 50) == (0, 0)

    def test_ring_counts(self, ring_image):
        # V=8, E=8, F=0 so chi=0 and beta0=1 forces beta1=1
        assert brute_force_betti(ring_image, 200) == (1, 1)

    def test_two_isolated_pixels(self, two_blob_strip):
        assert brute_force_betti(two_blob_strip, 150) == (2, 0)


class TestOracleEquivalence:
    @given(small_images)
    @settings(max_examples=60, deadline=None)
    def test_barcode_betti_matches_brute_force(self, img):
        bc = superlevel_barcode(img)
        for cutoff in (0, 1, 64, 128, 192, 255):
            assert betti_at(bc, cutoff) == brute_force_betti(img, cutoff)

    def test_every_cutoff_on_fixed_sample(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            h, w = rng.integers(1, 7, size=2)
            img = gray(rng.integers(0, 256, size=(h, w)))
            bc = superlevel_barcode(img)
            for cutoff in range(256):
                assert betti_at(bc, cutoff) == brute_force_betti(img, cutoff)


def _dihedral_variants(px: np.ndarray):
    out = []
    a = px
    for _ in range(4):
        a = np.rot90(a)
        out.append(a)
        out.append(np.fliplr(a))
    return out


class TestInvariants:
    @given(small_images)
    @settings(max_examples=40, deadline=None)
    def test_exactly_one_infinite_bar(self, img):
        bc = superlevel_barcode(img)
        assert len(inf_bars(bc)) == 1
        assert all(dim == 0 for dim, _ in inf_bars(bc))

    @given(small_images)
    @settings(max_examples=30, deadline=None)
    def test_symmetry_group_invariance(self, img):
        reference = (bar_tuples(superlevel_barcode(img)),
                     inf_bars(superlevel_barcode(img)))
        for variant in _dihedral_variants(img.pixels):
            bc = superlevel_barcode(GrayImage(variant.copy()))
            assert (bar_tuples(bc), inf_bars(bc)) == reference

    @given(small_images)
    @settings(max_examples=30, deadline=None)
    def test_negation_duality(self, img):
        key = lambda t: (t[0], t[1], -1 if t[2] is None else t[2])
        sup = sorted(((b.dim, b.birth_intensity, b.death_intensity)
                      for b in superlevel_barcode(img).bars), key=key)
        neg = GrayImage(255 - img.pixels)
        sub = sorted(((d, 255 - birth, None if death is None else 255 - death)
                      for d, birth, death in sublevel_bars(neg)), key=key)
        assert sup == sub

    @given(small_images)
    @settings(max_examples=30, deadline=None)
    def test_bar_count_bounds(self, img):
        bc = superlevel_barcode(img)
        h, w = img.pixels.shape
        n_dim1 = sum(1 for b in bc.bars if b.dim == 1)
        assert n_dim1 <= max(0, (w - 1) * (h - 1))
        n_dim0 = sum(1 for b in bc.bars if b.dim == 0)
        assert n_dim0 <= _count_max_plateaus(img.pixels)


def _count_max_plateaus(px: np.ndarray) -> int:
    """Connected equal-value regions with no strictly brighter neighbor."""
    h, w = px.shape
    seen = np.zeros((h, w), dtype=bool)
    count = 0
    for sy in range(h):
        for sx in range(w):
            if seen[sy, sx]:
                continue
            value = px[sy, sx]
            stack = [(sy, sx)]
            seen[sy, sx] = True
            cells = []
            is_max = True
            while stack:
                y, x = stack.pop()
                cells.append((y, x))
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if not (0 <= ny < h and 0 <= nx < w):
                        continue
                    if px[ny, nx] > value:
                        is_max = False
                    elif px[ny, nx] == value and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
            if is_max:
                count += 1
    return count


class TestSerialization:
    def test_json_round_trip(self, tmp_path, ring_image):
        bc = superlevel_barcode(ring_image)
        path = tmp_path / "bars.json"
        bc.save(path)
        loaded = Barcode.load(path)
        assert loaded.width == bc.width and loaded.height == bc.height
        assert loaded.bars == bc.bars

    def test_infinite_death_serialized_as_null(self, ring_image):
        obj = superlevel_barcode(ring_image).to_json_dict()
        deaths = [b["death"] for b in obj["bars"]]
        assert None in deaths

    def test_bar_validation(self):
        with pytest.raises(ValueError):
            PersistenceBar(1, 100, None)
        with pytest.raises(ValueError):
            PersistenceBar(0, 100, 150)
        with pytest.raises(ValueError):
            PersistenceBar(2, 100, 50)
