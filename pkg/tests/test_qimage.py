import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from qops.errors import UnsupportedRaster
from qops.qimage import (
    NormalizationRange,
    QuaternionImage,
    compose,
    exemplar_ranges,
    export_gamut,
    extract_channels,
    from_rgb,
    quantize,
    read_png,
    to_rgb,
    write_gamut_csv,
    write_png,
)
from qops.split import SplitSpec

from helpers import checkerboard, gray_ramp

rasters = arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 6), st.just(3)))


def test_from_rgb_examples():
    q = from_rgb(np.array([[[255, 0, 0], [0, 0, 0], [128, 128, 128]]], dtype=np.uint8))
    assert tuple(q.data[0, 0]) == (0, 1, 0, 0)
    assert tuple(q.data[0, 1]) == (0, 0, 0, 0)
    assert tuple(q.data[0, 2]) == (0, 128 / 255, 128 / 255, 128 / 255)
    assert (q.height, q.width) == (1, 3)


def test_image_is_read_only():
    q = from_rgb(np.zeros((2, 2, 3), np.uint8))
    with pytest.raises(ValueError):
        q.data[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        QuaternionImage(np.zeros((2, 2, 3)))


@given(rasters)
def test_truncate_round_trip(img):
    assert np.array_equal(to_rgb(from_rgb(img), NormalizationRange.truncate()), img)


def test_round_trip_all_levels():
    img = np.stack(list(np.meshgrid(np.arange(256), np.arange(256)[::-1])) + [np.full((256, 256), 7)], -1).astype(np.uint8)
    assert np.array_equal(to_rgb(from_rgb(img), "truncate"), img)


def test_constant_channel_degenerate():
    q = compose(np.full((3, 3), 0.4), np.full((3, 3), 0.0), np.full((3, 3), 1.0))
    out = to_rgb(q, "per_channel")
    # degenerate range: values pass through clamped
    assert (out[..., 0] == 102).all() and (out[..., 1] == 0).all() and (out[..., 2] == 255).all()
    assert NormalizationRange.of_image(q).degenerate == (True, True, True)


def test_constant_zero_channel_all_zero():
    # a constant channel holding zero encodes to all zeros; a varying one stretches
    z = np.zeros((2, 5))
    ramp = np.tile(np.linspace(0.2, 0.6, 5), (2, 1))
    out = to_rgb(compose(z, ramp, z), "per_channel")
    assert (out[..., 0] == 0).all() and (out[..., 2] == 0).all()
    assert out[0, :, 1].tolist() == [0, 64, 128, 191, 255]


def test_minus_one_zero_one_levels():
    c = np.array([[-1.0, 0.0, 1.0]])
    out = to_rgb(compose(c, c, c), "per_channel")
    assert out[0, :, 0].tolist() == [0, 128, 255]


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
def test_quantize_bounds(v):
    out = quantize(v)
    assert out.dtype == np.uint8
    assert out.min() >= 0 and out.max() <= 255


def test_quantize_nonfinite():
    assert quantize(np.array([np.nan, np.inf, -np.inf, 0.5])).tolist() == [0, 255, 0, 128]


def test_extract_channels():
    z = np.zeros((2, 3))
    assert all((c == 0).all() for c in extract_channels(compose(z, z, z)))
    r = np.arange(6.0).reshape(2, 3)
    a, b, c = extract_channels(compose(r, z, z))
    assert np.array_equal(a, r) and not b.any() and not c.any()
    q = from_rgb(np.random.default_rng(1).integers(0, 256, (4, 4, 3), dtype=np.uint8))
    assert np.array_equal(compose(*extract_channels(q)).data, q.data)


def test_two_pixel_exemplar():
    exemplar = np.array([[[255, 0, 0], [0, 0, 255]]], dtype=np.uint8)
    spec = SplitSpec.from_mu("minus", 7)
    rng = exemplar_ranges(exemplar, spec)
    # hand evaluation: for pure v and unit f, the minus half is (f . v) f
    f = np.ones(3) / np.sqrt(3)
    halves = [np.dot(f, v) * f for v in (np.array([1.0, 0, 0]), np.array([0, 0, 1.0]))]
    want_lo = np.min(halves, axis=0)
    want_hi = np.max(halves, axis=0)
    assert np.allclose(rng.mins, want_lo, rtol=0, atol=1e-15)
    assert np.allclose(rng.maxs, want_hi, rtol=0, atol=1e-15)
    assert np.allclose(rng.mins, 1 / 3, atol=1e-15)
    assert rng.degenerate == (True, True, True)
    assert rng.mode == "exemplar"


def test_constant_exemplar_degenerate():
    rng = exemplar_ranges(np.full((4, 4, 3), 90, np.uint8), SplitSpec.from_mu("plus", 1, 2))
    assert all(rng.degenerate)


def test_self_exemplar_matches_per_channel(rng):
    from qops.workflows import recolorize

    img = rng.integers(0, 256, (12, 9, 3), dtype=np.uint8)
    spec = SplitSpec.from_mu("minus", 4, 11)
    assert np.array_equal(recolorize(img, spec, exemplar_ranges(img, spec)), recolorize(img, spec, "per_channel"))


def test_exemplar_ranges_order_independent(rng):
    img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    spec = SplitSpec.from_mu("plus", 2, 9)
    perm = rng.permutation(64)
    shuffled = img.reshape(64, 3)[perm].reshape(8, 8, 3)
    assert exemplar_ranges(img, spec) == exemplar_ranges(shuffled, spec)


def test_range_merge_and_validation():
    a = NormalizationRange("per_channel", (0, 1, 2), (1, 2, 3))
    b = NormalizationRange("per_channel", (-1, 1.5, 2), (0.5, 5, 2.5))
    m = a.merge(b)
    assert m.mins == (-1, 1, 2) and m.maxs == (1, 5, 3)
    with pytest.raises(ValueError):
        NormalizationRange("per_channel", (1, 0, 0), (0, 1, 1))
    with pytest.raises(ValueError):
        NormalizationRange("bogus")
    with pytest.raises(ValueError):
        a.merge(NormalizationRange.truncate())


def test_joint_mode_uses_global_range():
    r = np.array([[0.0, 0.5]])
    g = np.array([[0.25, 0.25]])
    b = np.array([[1.0, 1.0]])
    out = to_rgb(compose(r, g, b), "joint")
    assert out[0, :, 0].tolist() == [0, 128]
    assert out[0, :, 1].tolist() == [64, 64]
    assert out[0, :, 2].tolist() == [255, 255]


def test_gamut_export():
    assert export_gamut(np.full((3, 3, 3), 7, np.uint8))[0].shape == (1, 3)
    cube = np.array([[[r, g, b] for r in (0, 255) for g in (0, 255) for b in (0, 255)]], dtype=np.uint8)
    pts, counts = export_gamut(cube)
    assert pts.shape == (8, 3) and counts.tolist() == [1] * 8
    pts, _ = export_gamut(np.array([[[51, 102, 204]]], np.uint8))
    assert np.allclose(pts[0], [0.2, 0.4, 0.8])
    hsv, _ = export_gamut(np.array([[[0, 255, 0], [0, 0, 255]]], np.uint8), "hsv")
    assert sorted(hsv[:, 0].tolist()) == [120.0, 240.0]
    assert (hsv[:, 0] < 360).all()
    with pytest.raises(ValueError):
        export_gamut(cube, "lab")


def test_gamut_csv(tmp_path):
    pts, counts = export_gamut(checkerboard(4, 4))
    path = tmp_path / "g.csv"
    write_gamut_csv(path, pts, counts)
    lines = path.read_text().splitlines()
    assert lines[0] == "c1,c2,c3,count"
    assert len(lines) == 3
    assert lines[1].split(",")[3] == "8"


def test_png_io(tmp_path):
    rgb = np.random.default_rng(3).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    write_png(tmp_path / "a.png", rgb)
    assert np.array_equal(read_png(tmp_path / "a.png"), rgb)
    g = gray_ramp(4, 9)
    write_png(tmp_path / "g.png", g)
    assert np.array_equal(read_png(tmp_path / "g.png"), g)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_png_rejects_alpha_and_16bit(tmp_path):
    Image.fromarray(np.zeros((2, 2, 4), np.uint8), "RGBA").save(tmp_path / "a.png")
    with pytest.raises(UnsupportedRaster):
        read_png(tmp_path / "a.png")
    Image.fromarray(np.zeros((2, 2), np.uint16)).save(tmp_path / "b.png")
    with pytest.raises(UnsupportedRaster):
        read_png(tmp_path / "b.png")
    with pytest.raises(UnsupportedRaster):
        write_png(tmp_path / "c.png", np.zeros((2, 2, 4), np.uint8))
    with pytest.raises(UnsupportedRaster):
        from_rgb(np.zeros((2, 2, 3), np.uint16) + 300)
