import csv

import numpy as np
import pytest

from qops.errors import ImageTooSmall
from qops.pipeline import (
    MANIFEST_HEADER,
    ComboSpec,
    batch_transform,
    bench_time_complexity,
    enumerate_combinations,
    linear_fit,
    shrink_schedule,
    tile_apply,
    write_bench_csv,
)
from qops.qimage import exemplar_ranges, read_png, write_png
from qops.split import SplitSpec, mu
from qops.stages import Map, Normalize, run, run_tiled, tile_slices
from qops.stain import StainBasis
from qops.workflows import (
    ContrastParams,
    RestainParams,
    contrast_workflow,
    decolor_workflow,
    recolor_workflow,
    restain_workflow,
    stainsep_workflow,
)

from helpers import HEMATOXYLIN, DAB, two_stain_blocks


def test_enumerator():
    for sign in ("plus", "minus"):
        combos = enumerate_combinations(sign)
        pairs = [(c.i_index, c.j_index) for c in combos]
        assert len(combos) == 91
        assert (3, 3) in pairs and (3, 4) in pairs and (3, 2) not in pairs
        assert pairs == sorted(pairs)
        assert sum(i == j for i, j in pairs) == 13
        assert all(c.sign == sign for c in combos)
    assert enumerate_combinations() == enumerate_combinations()
    assert ComboSpec("minus", 3, 4).tag == "minus_mu3_mu4"
    assert ComboSpec("plus", 1, 2).split_spec == SplitSpec.from_mu("plus", 1, 2)
    with pytest.raises(ValueError):
        ComboSpec("minus", 4, 3)


def test_tile_slices_cover_once():
    cover = np.zeros((37, 53), int)
    for t in tile_slices(37, 53, 16):
        cover[t] += 1
    assert (cover == 1).all()
    with pytest.raises(ValueError):
        tile_slices(4, 4, 0)


def _workflows(img):
    spec = SplitSpec.from_mu("minus", 7, 8)
    return {
        "recolor": recolor_workflow(spec),
        "recolor_joint": recolor_workflow(spec, "joint"),
        "recolor_exemplar": recolor_workflow(spec, exemplar_ranges(img[:40, :40], spec)),
        "decolor": decolor_workflow(mu(4)),
        "contrast_natural": contrast_workflow(ContrastParams.natural()),
        "contrast_ct": contrast_workflow(ContrastParams.ct()),
        "restain": restain_workflow(RestainParams(((0, 1, 0), (1, 0, 0)), "b,r")),
        "stainsep": stainsep_workflow(StainBasis.mu7(), "r,b"),
    }


@pytest.fixture(scope="module")
def stained():
    c1, c2 = two_stain_blocks()
    from qops.stain import forward_model

    return forward_model(HEMATOXYLIN, DAB, c1, c2)


@pytest.mark.parametrize("name", list(_workflows(np.zeros((64, 64, 3), np.uint8))))
@pytest.mark.parametrize("tile", [1, 7, 32, 96])
def test_tiling_bit_identical(stained, name, tile):
    wf = _workflows(stained)[name]
    direct = wf(stained)
    tiled = tile_apply(stained, wf, tile)
    if isinstance(direct, tuple):
        assert all(np.array_equal(a, b) for a, b in zip(direct, tiled))
    else:
        assert np.array_equal(direct, tiled)


def test_tiling_threads(stained):
    wf = recolor_workflow(SplitSpec.from_mu("plus", 2, 5))
    assert np.array_equal(wf.tiled(stained, 20, threads=4), wf(stained))


def test_merged_partials_equal_single_pass(rng):
    block = rng.normal(size=(30, 30, 3))
    stages = [Map(lambda b, p: b * 2.0), Normalize("per_channel")]
    assert np.array_equal(run_tiled(stages, block, 8), run(stages, block))
    n = Normalize("per_channel")
    parts = [n.partial(block[t]) for t in tile_slices(30, 30, 7)]
    lo, hi = n.merge(parts)
    assert np.array_equal(lo, block.min(axis=(0, 1))) and np.array_equal(hi, block.max(axis=(0, 1)))


def _dataset(tmp_path, n=2):
    d = tmp_path / "data"
    d.mkdir()
    rs = np.random.default_rng(5)
    for k in range(n):
        write_png(d / f"img{k}.png", rs.integers(0, 256, (6, 5, 3), dtype=np.uint8))
    (d / "notes.txt").write_text("ignored")
    return d


def test_batch_cardinality_and_ranges(tmp_path):
    d = _dataset(tmp_path)
    exemplar = np.random.default_rng(9).integers(0, 256, (8, 8, 3), dtype=np.uint8)
    res = batch_transform(d, exemplar, ["minus"], tmp_path / "out")
    pngs = sorted((tmp_path / "out").glob("*.png"))
    assert len(pngs) == 91 * 2 == len(res.rows)
    assert not res.errors
    with open(res.manifest, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0].keys()) == MANIFEST_HEADER
    by_map = {}
    for r in rows:
        by_map.setdefault((r["f"], r["g"]), set()).add(tuple(r[k] for k in MANIFEST_HEADER[5:]))
    assert all(len(v) == 1 for v in by_map.values())
    r0 = rows[0]
    want = exemplar_ranges(exemplar, SplitSpec.from_mu("minus", 1, 1))
    assert float(r0["min_r"]) == want.mins[0] and float(r0["max_b"]) == want.maxs[2]
    out = read_png(tmp_path / "out" / r0["output"])
    assert out.shape == (6, 5, 3)


def test_batch_both_signs(tmp_path):
    d = _dataset(tmp_path, 1)
    res = batch_transform(d, np.full((2, 2, 3), 100, np.uint8), ["plus", "minus", "-"], tmp_path / "o")
    assert len(res.rows) == 182


def test_batch_subsample_reproducible(tmp_path):
    d = _dataset(tmp_path)
    ex = np.random.default_rng(2).integers(0, 256, (4, 4, 3), dtype=np.uint8)
    a = batch_transform(d, ex, ["minus"], tmp_path / "a", keep_fraction=0.5, seed=11)
    b = batch_transform(d, ex, ["minus"], tmp_path / "b", keep_fraction=0.5, seed=11)
    c = batch_transform(d, ex, ["minus"], tmp_path / "c", keep_fraction=0.2, seed=11)
    assert a.manifest.read_text() == b.manifest.read_text()
    assert len(a.rows) == 91 and len(c.rows) == round(0.2 * 182)
    assert len(list((tmp_path / "a").glob("*.png"))) == 91
    with pytest.raises(ValueError):
        batch_transform(d, ex, ["minus"], tmp_path / "x", keep_fraction=1.5)


def test_batch_collects_errors(tmp_path):
    d = _dataset(tmp_path, 1)
    (d / "broken.png").write_bytes(b"not a png")
    res = batch_transform(d, np.full((2, 2, 3), 9, np.uint8), ["plus"], tmp_path / "o")
    assert len(res.errors) == 1 and "broken.png" in res.errors[0][0]
    assert len(res.rows) == 91


def test_shrink_schedule():
    sizes = shrink_schedule(2800, 2200, 20)
    pixels = [h * w for h, w in sizes]
    assert len(sizes) == 20 and sizes[0] == (2800, 2200)
    assert all(a > b for a, b in zip(pixels, pixels[1:]))
    assert sizes[-1] == (round(2800 * 0.05), round(2200 * 0.05))
    with pytest.raises(ImageTooSmall):
        shrink_schedule(100, 100, 20)


def test_linear_fit():
    fit = linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert abs(fit.slope - 2) < 1e-12 and abs(fit.intercept - 1) < 1e-12 and abs(fit.r_squared - 1) < 1e-12


def test_small_bench_and_csv(tmp_path, rng):
    img = rng.integers(0, 256, (200, 160, 3), dtype=np.uint8)
    records, slope, intercept, r2 = bench_time_complexity(img, steps=6, repeats=1)
    assert len(records) == 6
    assert all(r.seconds > 0 for r in records)
    assert all(a.pixels > b.pixels for a, b in zip(records, records[1:]))
    with pytest.raises(ValueError):
        bench_time_complexity(img, steps=4)
    path = tmp_path / "bench.csv"
    write_bench_csv(path, records, slope, intercept, r2)
    lines = path.read_text().splitlines()
    assert lines[0] == "pixels,seconds"
    assert len(lines) == 8
    assert [len(ln.split(",")) for ln in lines[1:-1]] == [2] * 6
    assert float(lines[-1].split(",")[2]) == r2
