"""``qops`` command line.

Exit status: 0 success, 1 usage error, 2 processing error.  Diagnostics go
to stderr; results are only written to the named output files.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import re
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import pipeline, workflows
from .errors import ConfigError, QopsError
from .qimage import (
    as_rgb,
    atomic_write,
    exemplar_ranges,
    export_gamut,
    read_png,
    write_gamut_csv,
    write_png,
)
from .quaternion import Direction
from .split import Sign, SplitSpec, mu, mu_index
from .stain import StainBasis, estimate_macenko

log = logging.getLogger("qops")

# ---------------------------------------------------------------------------
# direction grammar
# ---------------------------------------------------------------------------

_MU_RE = re.compile(r"^mu(\d+)$", re.IGNORECASE)
_HEX_RE = re.compile(r"^#([0-9a-fA-F]{6})$")
_SAMPLE_RE = re.compile(r"^sample:(\d+),(\d+)(?::(\d+),(\d+))?$", re.IGNORECASE)


def parse_direction(text: str, image: Optional[np.ndarray] = None, normalize: bool = False) -> Direction:
    """Parse ``muN``, ``x,y,z``, ``#RRGGBB`` or ``sample:X,Y[:X2,Y2]``.

    Hex colors and samples become channel values / 255.  A sample reads the
    pixel at column X, row Y (or the mean over the inclusive rectangle) of
    ``image``.  ``normalize`` rescales the result to unit length; catalog
    directions are already unit.
    """
    s = text.strip()
    m = _MU_RE.match(s)
    if m:
        return mu(int(m.group(1)))
    m = _HEX_RE.match(s)
    if m:
        h = m.group(1)
        d = Direction.from_rgb255(int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16))
    elif (m := _SAMPLE_RE.match(s)) is not None:
        if image is None:
            raise ValueError("sample: directions need an input image")
        rgb = as_rgb(image)
        x1, y1 = int(m.group(1)), int(m.group(2))
        x2, y2 = (int(m.group(3)), int(m.group(4))) if m.group(3) else (x1, y1)
        x1, x2 = sorted((x1, x2))
        y1, y2 = sorted((y1, y2))
        if y2 >= rgb.shape[0] or x2 >= rgb.shape[1]:
            raise ValueError(f"sample {s!r} lies outside the {rgb.shape[1]}x{rgb.shape[0]} image")
        patch = rgb[y1 : y2 + 1, x1 : x2 + 1].reshape(-1, 3).astype(np.float64)
        d = Direction(*(patch.mean(axis=0) / 255.0))
    else:
        parts = s.split(",")
        if len(parts) != 3:
            raise ValueError(f"cannot parse direction {text!r}; expected muN, x,y,z, #RRGGBB or sample:X,Y")
        try:
            d = Direction(*(float(p) for p in parts))
        except ValueError:
            raise ValueError(f"cannot parse direction {text!r}") from None
    if d.is_zero:
        raise ValueError(f"direction {text!r} is zero")
    return d.normalized() if normalize else d


def format_direction(d: Direction) -> str:
    """Shortest exact text form: catalog name, hex color or float triple."""
    k = mu_index(d)
    if k is not None:
        return f"mu{k}"
    ints = [round(c * 255.0) for c in d.as_tuple()]
    if all(0 <= n <= 255 and n / 255.0 == c for n, c in zip(ints, d.as_tuple())):
        return "#{:02X}{:02X}{:02X}".format(*ints)
    return ",".join(repr(c) for c in d.as_tuple())


def parse_step(text: str) -> SplitSpec:
    """``sign:f:g`` (e.g. ``plus:mu10:mu11``) as a split spec."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"re-colorization step {text!r} must look like plus:mu10:mu11")
    return SplitSpec(Sign.parse(parts[0]), parse_direction(parts[1]), parse_direction(parts[2]))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class CliConfig:
    exemplar: Optional[str] = None
    contrast_preset: str = "natural"
    x_scale: float = 0.30
    tile: Optional[int] = None
    threads: Optional[int] = None
    seed: int = 0

    def validate(self) -> "CliConfig":
        if self.contrast_preset.lower() not in ("natural", "histology", "ct"):
            raise ConfigError(f"unknown contrast preset {self.contrast_preset!r}")
        if not 0.0 < self.x_scale <= 1.0:
            raise ConfigError(f"x_scale must be in (0, 1], got {self.x_scale}")
        if self.tile is not None and self.tile < 1:
            raise ConfigError("tile must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.exemplar is not None and not os.path.isfile(self.exemplar):
            raise ConfigError(f"exemplar {self.exemplar!r} does not exist")
        return self


_CONFIG_KEYS = {
    "exemplar": str,
    "contrast_preset": str,
    "x_scale": float,
    "tile": int,
    "threads": int,
    "seed": int,
}


def load_config(path: Optional[str]) -> CliConfig:
    """Read ``key = value`` pairs from every section of an INI-style file."""
    cfg = CliConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                setattr(cfg, key, _CONFIG_KEYS[key](raw))
            except ValueError:
                raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from None
    return cfg


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI-style file with default settings")
    common.add_argument("--threads", type=_positive_int, help="worker cap (falls back to QOPS_THREADS)")
    common.add_argument("--tile", type=_positive_int, help="process in square tiles of this size")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qops", description="Quaternion orthogonal planes split image tools")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io(sp, output=True):
        sp.add_argument("-i", "--input", required=True, help="input PNG")
        if output:
            sp.add_argument("-o", "--output", required=True, help="output PNG")

    sp = sub.add_parser("recolor", parents=[common], help="re-colorize with one split half")
    io(sp)
    sp.add_argument("--sign", default="minus", choices=["plus", "minus"])
    sp.add_argument("--f", default="mu7", help="direction f")
    sp.add_argument("--g", help="direction g (default: f)")
    sp.add_argument("--exemplar", help="take normalization ranges from this PNG")
    sp.add_argument("--mode", default="per_channel", choices=["per_channel", "joint", "truncate"])
    sp.add_argument("--raw", action="store_true", help="use picked directions without normalizing them")

    sp = sub.add_parser("decolor", parents=[common], help="convert to grayscale")
    io(sp)
    sp.add_argument("--method", default="p1", choices=["p1", "p2a", "p2b", "custom"])
    sp.add_argument("--f", help="direction for --method custom")

    sp = sub.add_parser("contrast", parents=[common], help="contrast enhancement")
    io(sp)
    sp.add_argument("--preset", choices=["natural", "histology", "ct"])
    for name in ("alpha", "beta", "gamma", "delta"):
        sp.add_argument(f"--{name}", type=float)

    sp = sub.add_parser("restain", parents=[common], help="paint stain channels in chosen colors")
    io(sp)
    sp.add_argument("--color", action="append", required=True, help="target color per stain (2 or 3)")
    sp.add_argument("--keep", required=True, help="channel per stain, e.g. r,b")
    sp.add_argument("--x-scale", type=float)
    sp.add_argument("--step", action="append", default=[], help="re-colorization step sign:f:g (3 colors)")
    sp.add_argument("--combine", default="or", choices=["or", "max"])

    sp = sub.add_parser("stainsep", parents=[common], help="per-stain grayscale maps")
    io(sp, output=False)
    sp.add_argument("-o", "--output", action="append", required=True, help="one output PNG per kept channel")
    sp.add_argument("--basis", default="mu7", choices=["mu7", "macenko", "manual"])
    sp.add_argument("--s1")
    sp.add_argument("--s2")
    sp.add_argument("--swap", action="store_true", help="exchange the two stain vectors")
    sp.add_argument("--keep", default="r,b")
    sp.add_argument("--step", action="append", default=[], help="re-colorization step for three stains")
    sp.add_argument("--via-restain", action="store_true", help="paint green/blue first, then separate")

    sp = sub.add_parser("enumerate", parents=[common], help="list the 91 mu-pair maps")
    sp.add_argument("--sign", default="minus", choices=["plus", "minus"])
    sp.add_argument("-o", "--output", required=True, help="CSV file")

    sp = sub.add_parser("batch", parents=[common], help="apply all 91 maps to a folder")
    sp.add_argument("--dataset", required=True, help="folder of PNG inputs")
    sp.add_argument("--exemplar", help="PNG providing the shared ranges")
    sp.add_argument("--sign", action="append", choices=["plus", "minus"])
    sp.add_argument("--out", required=True, help="output folder")
    sp.add_argument("--keep-fraction", type=float, default=1.0)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("bench", parents=[common], help="time the split over shrinking sizes")
    io(sp, output=False)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--sign", default="minus", choices=["plus", "minus"])
    sp.add_argument("--f", default="mu7")
    sp.add_argument("--g")
    sp.add_argument("--out", required=True, help="CSV file")

    sp = sub.add_parser("gamut", parents=[common], help="export distinct colors as a point cloud")
    io(sp, output=False)
    sp.add_argument("-o", "--output", required=True, help="CSV file")
    sp.add_argument("--space", default="rgb", choices=["rgb", "hsv"])
    return p


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _threads(args, cfg: CliConfig) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("QOPS_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"QOPS_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("QOPS_THREADS must be >= 1")
        return n
    return cfg.threads or 1


def _apply_thread_cap(n: int) -> None:
    from . import _numba

    if _numba.HAVE_NUMBA:
        import numba

        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def _run(workflow, image, args, cfg):
    tile = args.tile or cfg.tile
    if tile:
        return pipeline.tile_apply(image, workflow, tile, _threads(args, cfg))
    return workflow(image)


def cmd_recolor(args, cfg):
    img = read_png(args.input)
    norm = not args.raw
    f = parse_direction(args.f, img, normalize=norm)
    g = parse_direction(args.g, img, normalize=norm) if args.g else f
    spec = SplitSpec(Sign.parse(args.sign), f, g)
    exemplar = args.exemplar or cfg.exemplar
    rng = exemplar_ranges(read_png(exemplar), spec) if exemplar else args.mode
    write_png(args.output, _run(workflows.recolor_workflow(spec, rng), img, args, cfg))


def cmd_decolor(args, cfg):
    img = read_png(args.input)
    if args.method == "custom":
        if not args.f:
            raise UsageError("decolor --method custom needs --f")
        wf = workflows.decolor_workflow(parse_direction(args.f, img, normalize=True))
    elif args.method == "p1":
        wf = workflows.decolor_workflow(mu(7))
    elif args.method == "p2a":
        wf = workflows.decolor_workflow(Direction(*workflows.P2A_WEIGHTS).normalized())
    else:
        wf = workflows.p2b_workflow(img)
    write_png(args.output, _run(wf, img, args, cfg))


def cmd_contrast(args, cfg):
    img = read_png(args.input)
    base = workflows.ContrastParams.preset(args.preset or cfg.contrast_preset)
    vals = {k: getattr(args, k) if getattr(args, k) is not None else getattr(base, k) for k in ("alpha", "beta", "gamma", "delta")}
    p = workflows.ContrastParams(**vals)
    write_png(args.output, _run(workflows.contrast_workflow(p), img, args, cfg))


def cmd_restain(args, cfg):
    img = read_png(args.input)
    colors = [parse_direction(c, img) for c in args.color]
    params = workflows.RestainParams(
        colors,
        args.keep,
        args.x_scale if args.x_scale is not None else cfg.x_scale,
        [parse_step(s) for s in args.step] or (workflows.DEFAULT_RESTAIN_STEPS if len(colors) == 3 else ()),
        args.combine,
    )
    if params.n_c == 2:
        out = _run(workflows.restain_workflow(params), img, args, cfg)
    else:
        out = workflows.restain_multi(img, params)
    write_png(args.output, out)


def _basis(args, img) -> StainBasis:
    if args.basis == "mu7":
        basis = StainBasis.mu7()
    elif args.basis == "macenko":
        basis = estimate_macenko(img)
    else:
        if not (args.s1 and args.s2):
            raise UsageError("--basis manual needs --s1 and --s2")
        basis = StainBasis(parse_direction(args.s1, img), parse_direction(args.s2, img), "manual")
    return basis.swapped() if args.swap else basis


def cmd_stainsep(args, cfg):
    img = read_png(args.input)
    basis = _basis(args, img)
    keep = workflows.parse_keep(args.keep)
    if len(args.output) != len(keep):
        raise UsageError(f"give one -o per kept channel ({len(keep)}), got {len(args.output)}")
    if args.via_restain:
        outs = workflows.separate_via_restain(img, keep, cfg.x_scale, basis)
    elif args.step:
        outs = workflows.stain_separate_multi(img, basis, [parse_step(s) for s in args.step], keep)
    else:
        outs = _run(workflows.stainsep_workflow(basis, keep), img, args, cfg)
    for path, out in zip(args.output, outs):
        write_png(path, out)


def cmd_enumerate(args, cfg):
    combos = pipeline.enumerate_combinations(args.sign)

    def emit(fh):
        fh.write("sign,f,g\n")
        for c in combos:
            fh.write(f"{c.sign},mu{c.i_index},mu{c.j_index}\n")

    atomic_write(args.output, emit, text=True)


def cmd_batch(args, cfg):
    exemplar = args.exemplar or cfg.exemplar
    if not exemplar:
        raise UsageError("batch needs --exemplar (or exemplar in the config file)")
    res = pipeline.batch_transform(
        args.dataset,
        exemplar,
        args.sign or ["minus"],
        args.out,
        keep_fraction=args.keep_fraction,
        seed=args.seed if args.seed is not None else cfg.seed,
    )
    for path, msg in res.errors:
        print(f"qops: {path}: {msg}", file=sys.stderr)
    log.info("wrote %d images and %s", len(res.rows), res.manifest)
    if res.errors:
        return 2
    return 0


def cmd_bench(args, cfg):
    img = read_png(args.input)
    f = parse_direction(args.f, img, normalize=True)
    g = parse_direction(args.g, img, normalize=True) if args.g else f
    records, slope, intercept, r2 = pipeline.bench_time_complexity(
        img, args.steps, SplitSpec(Sign.parse(args.sign), f, g), args.repeats, os.path.basename(args.input)
    )
    pipeline.write_bench_csv(args.out, records, slope, intercept, r2)
    log.info("slope=%g intercept=%g r2=%.4f", slope, intercept, r2)


def cmd_gamut(args, cfg):
    pts, counts = export_gamut(read_png(args.input), args.space)
    write_gamut_csv(args.output, pts, counts)


_COMMANDS = {
    "recolor": cmd_recolor,
    "decolor": cmd_decolor,
    "contrast": cmd_contrast,
    "restain": cmd_restain,
    "stainsep": cmd_stainsep,
    "enumerate": cmd_enumerate,
    "batch": cmd_batch,
    "bench": cmd_bench,
    "gamut": cmd_gamut,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="qops: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        cfg.validate()
        _apply_thread_cap(_threads(args, cfg))
        rc = _COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"qops {args.command}: {exc}", file=sys.stderr)
        return 1
    except (QopsError, ValueError, OSError) as exc:
        print(f"qops {args.command}: {exc}", file=sys.stderr)
        return 2
    return int(rc or 0)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
