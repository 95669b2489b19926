"""Batch and bulk execution: tiling, the mu-pair enumerator, dataset
transformation with shared exemplar ranges, and the scaling benchmark."""

from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ImageTooSmall
from .qimage import as_rgb, atomic_write, exemplar_ranges, from_rgb, read_png, write_png
from .split import MU_COUNT, Sign, SplitSpec, mu
from .workflows import Workflow, recolorize

log = logging.getLogger(__name__)

MANIFEST_HEADER = ["input", "sign", "f", "g", "output", "min_r", "max_r", "min_g", "max_g", "min_b", "max_b"]
MIN_BENCH_SIDE = 64


@dataclass(frozen=True, order=True)
class ComboSpec:
    sign: str
    i_index: int
    j_index: int

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign.parse(self.sign).label)
        if not (1 <= self.i_index <= self.j_index <= MU_COUNT):
            raise ValueError(f"need 1 <= i <= j <= {MU_COUNT}, got ({self.i_index}, {self.j_index})")

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(Sign.parse(self.sign), mu(self.i_index), mu(self.j_index))

    @property
    def tag(self) -> str:
        return f"{self.sign}_mu{self.i_index}_mu{self.j_index}"


def enumerate_combinations(sign="minus") -> list[ComboSpec]:
    """All ``mu_i()mu_j`` maps with ``i <= j``, in lexicographic order (91)."""
    return [ComboSpec(sign, i, j) for i in range(1, MU_COUNT + 1) for j in range(i, MU_COUNT + 1)]


# ---------------------------------------------------------------------------
# tiling
# ---------------------------------------------------------------------------


def tile_apply(image, workflow: Workflow, tile_size: int, threads: int = 1):
    """Run ``workflow`` on ``tile_size`` square tiles.

    Min-max ranges are merged across tiles before encoding, so the result is
    bit-identical to ``workflow(image)``.
    """
    return workflow.tiled(image, tile_size, threads)


# ---------------------------------------------------------------------------
# batch transformation
# ---------------------------------------------------------------------------


@dataclass
class BatchResult:
    rows: list[dict]
    errors: list[tuple[str, str]]
    manifest: Path | None = None


def _list_images(dataset_dir) -> list[Path]:
    return sorted(p for p in Path(dataset_dir).iterdir() if p.suffix.lower() == ".png" and p.is_file())


def batch_transform(
    dataset_dir,
    exemplar,
    signs: Iterable = ("minus",),
    out_dir=".",
    keep_fraction: float = 1.0,
    seed: int = 0,
    manifest_name: str = "manifest.csv",
) -> BatchResult:
    """Re-colorize every PNG in ``dataset_dir`` with all 91 maps per sign.

    Each map is encoded with ranges taken from ``exemplar`` so all outputs
    share one scale.  ``keep_fraction < 1`` deletes a seeded random subset of
    the outputs afterwards (they are dropped from the manifest too).
    Unreadable inputs are collected in ``errors`` and skipped.
    """
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError("keep_fraction must be in [0, 1]")
    exemplar = as_rgb(read_png(exemplar) if isinstance(exemplar, (str, os.PathLike)) else exemplar)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    combos = [c for s in sorted({Sign.parse(s).label for s in signs}) for c in enumerate_combinations(s)]
    ranges = {c: exemplar_ranges(exemplar, c.split_spec) for c in combos}

    rows: list[dict] = []
    errors: list[tuple[str, str]] = []
    for path in _list_images(dataset_dir):
        try:
            img = read_png(path)
        except Exception as exc:  # collect and keep going
            log.warning("skipping %s: %s", path, exc)
            errors.append((str(path), str(exc)))
            continue
        for c in combos:
            rng = ranges[c]
            target = out_dir / f"{path.stem}_{c.tag}.png"
            try:
                write_png(target, recolorize(img, c.split_spec, rng))
            except OSError as exc:
                errors.append((str(target), str(exc)))
                continue
            rows.append(
                {
                    "input": path.name,
                    "sign": c.sign,
                    "f": f"mu{c.i_index}",
                    "g": f"mu{c.j_index}",
                    "output": target.name,
                    "min_r": repr(rng.mins[0]),
                    "max_r": repr(rng.maxs[0]),
                    "min_g": repr(rng.mins[1]),
                    "max_g": repr(rng.maxs[1]),
                    "min_b": repr(rng.mins[2]),
                    "max_b": repr(rng.maxs[2]),
                }
            )

    if keep_fraction < 1.0 and rows:
        rs = np.random.default_rng(seed)
        n_drop = len(rows) - int(round(keep_fraction * len(rows)))
        drop = set(rs.choice(len(rows), size=n_drop, replace=False).tolist())
        for k in sorted(drop):
            (out_dir / rows[k]["output"]).unlink(missing_ok=True)
        rows = [r for k, r in enumerate(rows) if k not in drop]

    manifest = out_dir / manifest_name

    def emit(fh):
        w = csv.DictWriter(fh, fieldnames=MANIFEST_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    atomic_write(manifest, emit, text=True)
    return BatchResult(rows, errors, manifest)


# ---------------------------------------------------------------------------
# time-complexity benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRecord:
    pixels: int
    seconds: float
    sign: str
    image_id: str


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.stack((x, np.ones_like(x)), axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def shrink_schedule(height: int, width: int, steps: int, shrink: float = 0.05) -> list[tuple[int, int]]:
    """Sizes at scale 1, 1 - shrink, 1 - 2 shrink, ... preserving aspect ratio."""
    sizes = []
    for k in range(steps):
        s = 1.0 - shrink * k
        h, w = int(round(height * s)), int(round(width * s))
        if s <= 0 or h < MIN_BENCH_SIDE or w < MIN_BENCH_SIDE:
            raise ImageTooSmall(f"step {k} would shrink {height}x{width} to {h}x{w} (minimum {MIN_BENCH_SIDE}x{MIN_BENCH_SIDE})")
        sizes.append((h, w))
    return sizes


def _resize(rgb: np.ndarray, h: int, w: int) -> np.ndarray:
    from PIL import Image

    if rgb.shape[:2] == (h, w):
        return rgb
    return np.asarray(Image.fromarray(rgb, "RGB").resize((w, h), Image.BICUBIC))


def bench_time_complexity(
    image,
    steps: int = 20,
    spec: SplitSpec | None = None,
    repeats: int = 3,
    image_id: str = "image",
    shrink: float = 0.05,
) -> tuple[list[BenchRecord], float, float, float]:
    """Time the split alone over a shrinking series of the image.

    Each size is timed for both signs with the single-threaded kernel and
    the best of ``repeats`` runs is kept; the two signs are averaged.
    Returns the records and the least-squares fit of seconds on pixels.
    """
    from .kernels import split_image

    if steps < 5:
        raise ValueError("the benchmark needs at least 5 steps")
    spec = spec or SplitSpec.from_mu("minus", 7)
    rgb = as_rgb(image)
    sizes = shrink_schedule(rgb.shape[0], rgb.shape[1], steps, shrink)
    f, g = spec.f.as_tuple(), spec.g.as_tuple()

    warm = from_rgb(rgb[:8, :8]).data
    split_image(warm, f, g, 1, parallel=False)

    # repeats are interleaved across sizes so a burst of system noise
    # cannot spoil every run of one size
    scaled = [_resize(rgb, h, w) for h, w in sizes]
    best = np.full((len(sizes), 2), np.inf)
    for _ in range(max(1, repeats)):
        for k, small in enumerate(scaled):
            q = np.ascontiguousarray(from_rgb(small).data)
            for s, sign in enumerate((1, -1)):
                t0 = time.perf_counter()
                split_image(q, f, g, sign, parallel=False)
                best[k, s] = min(best[k, s], time.perf_counter() - t0)
            del q
    records = [
        BenchRecord(h * w, float(np.mean(best[k])), "both", image_id) for k, (h, w) in enumerate(sizes)
    ]
    fit = linear_fit([r.pixels for r in records], [r.seconds for r in records])
    return records, fit.slope, fit.intercept, fit.r_squared


def write_bench_csv(path, records: Sequence[BenchRecord], slope: float, intercept: float, r2: float) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pixels", "seconds"])
        for r in records:
            w.writerow([r.pixels, repr(r.seconds)])
        # fit summary: the only three-field line
        w.writerow([repr(slope), repr(intercept), repr(r2)])

    atomic_write(path, emit, text=True)


__all__ = [
    "BatchResult",
    "BenchRecord",
    "ComboSpec",
    "LinearFit",
    "batch_transform",
    "bench_time_complexity",
    "enumerate_combinations",
    "linear_fit",
    "shrink_schedule",
    "tile_apply",
    "write_bench_csv",
]
