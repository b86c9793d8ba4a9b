import numpy as np
import pytest

from fbgpool import descriptors as D
from fbgpool.errors import FormatError
from fbgpool.partition import RegionId, compose_partition, fbg_partition, SPConfig
from oracles import reference_sift

GRID = D.DenseGrid(stride=4, scales=(16, 24))


def rand_img(seed, shape=(40, 48)):
    return np.random.default_rng(seed).random(shape)


def step_image(h=32, w=32):
    img = np.zeros((h, w))
    img[:, w // 2:] = 1.0
    return img


def row_of(ds, x, y, s):
    hit = np.nonzero((ds.centers[:, 0] == x) & (ds.centers[:, 1] == y) & (ds.scales == s))[0]
    assert hit.size == 1
    return ds.vectors[hit[0]]


def test_grid_validation():
    for bad in (dict(stride=0), dict(scales=()), dict(scales=(7,)), dict(scales=(9,))):
        with pytest.raises(ValueError):
            D.DenseGrid(**bad)
    assert D.DenseGrid(scales=(32, 16)).scales == (16, 32)


def test_dimensions():
    assert D.descriptor_dim("eSIFT") == D.descriptor_dim("eMSIFT") == 132
    assert D.descriptor_dim("eLBP") == 62
    with pytest.raises(ValueError):
        D.descriptor_dim("HOG")


def test_patches_past_the_image_are_skipped():
    ds = D.dense_sift(rand_img(0, (20, 20)), D.DenseGrid(4, (16,)))
    assert len(ds) == 4
    assert {tuple(c) for c in ds.centers} == {(8, 8), (8, 12), (12, 8), (12, 12)}
    assert len(D.dense_sift(rand_img(0, (10, 10)), GRID)) == 0


def test_constant_image_has_zero_gradient_histograms():
    img = np.full((32, 32), 0.25)
    ds = D.dense_sift(img, D.DenseGrid(4, (16,)))
    assert len(ds) > 0
    assert not ds.vectors[:, :128].any()
    np.testing.assert_array_equal(ds.vectors[:, 131], 0.25)
    assert (ds.vectors[:, 128:130] > 0).all()
    np.testing.assert_array_equal(ds.vectors[:, 130], 0.5)


def test_step_edge_concentrates_in_horizontal_bins():
    ds = D.dense_sift(step_image(), D.DenseGrid(4, (16,)))
    v = row_of(ds, 16, 16, 16)[:128].reshape(16, 8)
    frac = v[:, [0, 4]].sum() / v.sum()
    assert frac >= 0.9


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_matches_reference_extractor(seed):
    rng = np.random.default_rng(seed)
    img = rng.random((36, 40))
    s = int(rng.choice([16, 24]))
    ds = D.dense_sift(img, D.DenseGrid(4, (s,)))
    i = int(rng.integers(len(ds)))
    x, y = ds.centers[i]
    np.testing.assert_allclose(ds.vectors[i], reference_sift(img, int(x), int(y), s), rtol=0, atol=1e-10)

    mask = np.zeros_like(img, bool)
    mask[6:30, 5:33] = rng.random((24, 28)) < 0.7
    box = (5.0, 6.0, 28.0, 24.0)
    ms = D.dense_sift(img, D.DenseGrid(4, (s,)), mask=mask, frame=box)
    expect = reference_sift(img, int(x), int(y), s, mask=mask, frame=box)
    np.testing.assert_allclose(row_of(ms, x, y, s), expect, rtol=0, atol=1e-10)


def test_full_mask_emsift_equals_esift():
    img = rand_img(3)
    a = D.dense_sift(img, GRID)
    b = D.dense_sift(img, GRID, mask=np.ones(img.shape, bool))
    assert b.kind == "eMSIFT"
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_patch_covering_mask_matches_esift_for_that_patch():
    img = rand_img(4)
    mask = np.zeros(img.shape, bool)
    mask[4:28, 8:32] = True  # patch of the (20, 16, 24) grid point
    a = D.dense_sift(img, GRID)
    b = D.dense_sift(img, GRID, mask=mask, frame=(0.0, 0.0, 48.0, 40.0))
    np.testing.assert_array_equal(row_of(a, 20, 16, 24), row_of(b, 20, 16, 24))


def test_mask_monotonicity_of_gradient_contributions():
    img = rand_img(5)
    rng = np.random.default_rng(5)
    small = rng.random(img.shape) < 0.3
    big = small | (rng.random(img.shape) < 0.4)
    e_small = D.orientation_energy(img, small)
    e_big = D.orientation_energy(img, big)
    np.testing.assert_array_equal(e_small[small], e_big[small])
    assert not e_small[~small].any()


def test_norm_law():
    ds = D.dense_sift(rand_img(6), GRID)
    g = ds.vectors[:, :128]
    norms = np.linalg.norm(g, axis=1)
    assert np.all((norms == 0) | (np.abs(norms - 1) <= 1e-6))
    assert (g >= 0).all()


def test_clip_then_renormalize_by_hand():
    h = np.zeros((1, 128))
    h[0, 0], h[0, 1:5] = 10.0, 1.0
    n = np.sqrt(104.0)
    c = np.array([0.2] + [1.0 / n] * 4)
    c /= np.linalg.norm(c)
    out = D.normalize_sift(h)
    np.testing.assert_allclose(out[0, :5], c, rtol=0, atol=1e-15)
    assert not out[0, 5:].any()


def test_normalize_keeps_zero_histograms():
    out = D.normalize_sift(np.zeros((2, 128)))
    assert not out.any()


def test_scan_order_and_determinism():
    img = rand_img(7)
    a = D.dense_sift(img, GRID)
    b = D.dense_sift(img.copy(), GRID)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    keys = [(int(y), int(x), int(s)) for (x, y), s in zip(a.centers, a.scales)]
    assert keys == sorted(keys)
    lb = D.dense_lbp(img, GRID)
    assert [(d.y, d.x, d.scale) for d in lb] == sorted((d.y, d.x, d.scale) for d in lb)


def test_where_restricts_centers():
    img = rand_img(8)
    where = np.zeros(img.shape, bool)
    where[16, :] = True
    ds = D.dense_sift(img, GRID, where=where)
    assert set(ds.centers[:, 1]) == {16}
    full = D.dense_sift(img, GRID)
    # batch size changes the contraction's summation order, hence the tolerance
    np.testing.assert_allclose(ds.vectors, full.vectors[full.centers[:, 1] == 16], rtol=0, atol=1e-14)


def test_enrichment_uses_frame_and_clamps():
    img = rand_img(9)
    ds = D.dense_sift(img, D.DenseGrid(4, (16,)), mask=np.ones(img.shape, bool), frame=(10.0, 10.0, 12.0, 12.0))
    v = row_of(ds, 8, 8, 16)
    assert v[128] == 0.0 and v[129] == 0.0 and v[130] == 1.0
    v = row_of(ds, 16, 16, 16)
    assert v[128] == pytest.approx(0.5) and v[129] == pytest.approx(0.5)


def test_extract_emsift_uses_mask_bounding_box():
    img = rand_img(10)
    mask = np.zeros(img.shape, bool)
    mask[8:24, 12:36] = True
    ds = D.extract("eMSIFT", img, GRID, mask=mask)
    ref = D.dense_sift(img, GRID, mask=mask, frame=(12.0, 8.0, 24.0, 16.0))
    np.testing.assert_array_equal(ds.vectors, ref.vectors)
    assert len(D.extract("eMSIFT", img, GRID, mask=np.zeros(img.shape, bool))) == 0
    with pytest.raises(ValueError):
        D.extract("eMSIFT", img, GRID)


# -- LBP

def test_uniform_table():
    assert D.UNIFORM_BIN.max() == 58
    assert (D.UNIFORM_BIN < 58).sum() == 58
    assert D.UNIFORM_BIN[0] != D.UNIFORM_BIN[255]
    assert D.UNIFORM_BIN[0b01010101] == 58


def test_lbp_constant_image_is_all_ones_pattern():
    img = np.full((20, 20), 0.7)
    assert (D.lbp_codes(img) == 255).all()
    ds = D.dense_lbp(img, D.DenseGrid(4, (16,)))
    h = ds.vectors[:, :59]
    np.testing.assert_array_equal(h[:, D.UNIFORM_BIN[255]], 1.0)
    assert h.sum() == len(ds)


def test_lbp_isolated_bright_pixel_has_code_zero():
    img = np.zeros((5, 5))
    img[2, 2] = 1.0
    codes = D.lbp_codes(img)
    assert codes[2, 2] == 0
    # east neighbor of the pixel to its left is the bright one
    assert codes[2, 1] & 1


def rot4(code):
    return ((code << 4) | (code >> 4)) & 0xFF


def test_lbp_rotation_permutes_patterns():
    img = np.random.default_rng(0).random((16, 16))
    codes = D.lbp_codes(img)
    rot_codes = D.lbp_codes(img[::-1, ::-1])
    np.testing.assert_array_equal(rot_codes, rot4(codes)[::-1, ::-1])

    perm = np.zeros(59, np.int64)
    for c in range(256):
        perm[D.UNIFORM_BIN[c]] = D.UNIFORM_BIN[rot4(c)]
    grid = D.DenseGrid(4, (16,))
    h = D.dense_lbp(img, grid).vectors[0, :59]
    hr = D.dense_lbp(img[::-1, ::-1].copy(), grid).vectors[0, :59]
    np.testing.assert_array_equal(hr[perm], h)


def test_lbp_histograms_are_l1_normalized():
    ds = D.dense_lbp(rand_img(1), GRID)
    np.testing.assert_allclose(ds.vectors[:, :59].sum(axis=1), 1.0, rtol=0, atol=1e-12)
    assert ds.dim == 62


def test_lbp_histogram_counts_by_brute_force():
    img = rand_img(2, (24, 24))
    ds = D.dense_lbp(img, D.DenseGrid(8, (16,)))
    bins = D.UNIFORM_BIN[D.lbp_codes(img)]
    for d in ds:
        patch = bins[d.y - 8:d.y + 8, d.x - 8:d.x + 8]
        expect = np.bincount(patch.ravel(), minlength=59) / 256.0
        np.testing.assert_array_equal(d.vector[:59], expect)


# -- pools

def test_all_centers_in_ground():
    img = rand_img(3, (48, 48))
    mask = np.zeros(img.shape, bool)
    mask[0, 0] = True
    ds = D.dense_sift(img, D.DenseGrid(8, (16,)))
    pools = D.assign_to_pools(ds, fbg_partition(mask, 2))
    assert len(pools[RegionId("G")]) == len(ds)
    assert len(pools[RegionId("F")]) == len(pools[RegionId("B")]) == 0


def test_border_center_goes_to_border_pool():
    img = rand_img(4, (48, 48))
    mask = np.zeros(img.shape, bool)
    mask[10:30, 10:22] = True
    ds = D.dense_sift(img, D.DenseGrid(4, (16,)))
    pools = D.assign_to_pools(ds, fbg_partition(mask, 5))
    centers = {tuple(c) for c in pools[RegionId("B")].centers}
    assert (24, 16) in centers  # two pixels right of the figure, patch covers it


def test_pool_sizes_sum_to_count():
    rng = np.random.default_rng(5)
    img = rng.random((40, 40))
    ds = D.dense_sift(img, GRID)
    for _ in range(10):
        mask = rng.random(img.shape) < 0.2
        mask[20, 20] = True
        part = compose_partition(mask, 3, SPConfig("cartesian"))
        pools = D.assign_to_pools(ds, part)
        assert sum(len(p) for p in pools.values()) == len(ds)
        assert len(pools) == 6


def test_dump_round_trip(tmp_path):
    rows = rand_img(6, (5, 132)).astype(np.float32)
    D.write_dump(tmp_path / "d.bin", rows)
    data = (tmp_path / "d.bin").read_bytes()
    assert data[:8] == b"FBGDUMP1" and len(data) == 16 + 5 * 132 * 4
    np.testing.assert_array_equal(D.read_dump(tmp_path / "d.bin"), rows)
    (tmp_path / "bad.bin").write_bytes(b"NOTADUMP" + data[8:])
    with pytest.raises(FormatError):
        D.read_dump(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(data[:-4])
    with pytest.raises(FormatError):
        D.read_dump(tmp_path / "short.bin")
