"""Command-line front end.

Every pipeline flag mirrors a key in the flat JSON config file; flags win
over the file. Exit codes: 0 success, 2 bad usage or bad configuration,
1 processing failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from cofkit.appshell.bench import format_report, run_bench
from cofkit.appshell.config import ConfigError, build_config
from cofkit.appshell.pipeline import (
    StageError,
    build_matrix,
    execute_pipeline,
    load_bundle,
    quantize_image,
    run_pipeline,
)
from cofkit.filters import (
    SCRIBBLE_BG,
    SCRIBBLE_FG,
    fb_cof,
    make_fixture,
    propagate_scribbles,
    selective_gray,
)
from cofkit.imagecore import DecodeError, EncodeError, load_image, save_image

FIXTURE_NAMES = ("two-region-checkerboard", "ramp", "step-stripes", "star-field")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="JSON", help="flat JSON config file")
    p.add_argument("--k", type=int, help="palette size (1-256)")
    p.add_argument("--grid-spacing", type=int, dest="grid_spacing", help="sample stride for palette fitting")
    p.add_argument("--window", type=int, help="window radius; 7 means 15x15")
    p.add_argument("--sigma-s", type=float, dest="sigma_s", help="spatial Gaussian sigma")
    p.add_argument("--sigma-r", type=float, dest="sigma_r", help="cluster softening sigma; 0 keeps hard statistics")
    p.add_argument("--epsilon", type=float, help="normalization guard term")
    p.add_argument("--iterations", type=int, help="filter passes")
    p.add_argument("--mode", choices=("iterative", "rolling"), help="reuse statistics or relearn each pass")
    p.add_argument("--seed", type=int, help="palette fitting seed")
    p.add_argument("--mask", metavar="PNG", help="restrict statistics to bright mask pixels")
    p.add_argument("--matrix-in", dest="matrix_in", metavar="JSON", help="reuse a saved matrix+palette")
    p.add_argument("--matrix-out", dest="matrix_out", metavar="JSON", help="save the matrix+palette")


_PIPELINE_KEYS = (
    "k", "grid_spacing", "window", "sigma_s", "sigma_r", "epsilon",
    "iterations", "mode", "seed", "mask", "matrix_in", "matrix_out",
)


def _config(args):
    overrides = {key: getattr(args, key) for key in _PIPELINE_KEYS}
    return build_config(args.config, overrides)


def read_scribbles(path, shape) -> np.ndarray:
    """Decode a stroke overlay PNG: red pixels mark foreground, blue mark
    background, anything else is unmarked."""
    raster = load_image(path)
    if raster.shape[:2] != tuple(shape):
        raise ValueError(f"scribble shape {raster.shape[:2]} does not match image {tuple(shape)}")
    r, g, b = raster[..., 0], raster[..., 1], raster[..., 2]
    scribbles = np.zeros(shape, dtype=np.int8)
    scribbles[(r > 0.5) & (g < 0.5) & (b < 0.5)] = SCRIBBLE_FG
    scribbles[(b > 0.5) & (g < 0.5) & (r < 0.5)] = SCRIBBLE_BG
    return scribbles


def _load_pair(args):
    """Foreground/background matrix bundles for the two-matrix modes."""
    m_f, _, pal_f = load_bundle(args.matrix_fg)
    m_b, _, pal_b = load_bundle(args.matrix_bg)
    if pal_f is None or pal_b is None:
        raise ValueError("both matrix files must carry a palette")
    if not np.array_equal(pal_f.centers, pal_b.centers):
        raise ValueError("foreground and background matrices use different palettes")
    if m_f.shape != (pal_f.k, pal_f.k) or m_b.shape != (pal_b.k, pal_b.k):
        raise ValueError("matrix dimension does not match its palette")
    return m_f, m_b, pal_f


def cmd_filter(args) -> int:
    cfg = _config(args)
    out = run_pipeline(cfg, load_image(args.input))
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_iterate(args) -> int:
    cfg = _config(args)
    result = execute_pipeline(cfg, load_image(args.input))
    with open(args.output, "w") as fh:
        fh.write("iteration,msd\n")
        for i, value in enumerate(result.msd, start=1):
            fh.write(f"{i},{value!r}\n")
    if args.image_out:
        save_image(result.output, args.image_out)
    print(f"wrote {args.output} ({len(result.msd)} rows)")
    return 0


def cmd_fb(args) -> int:
    cfg = _config(args)
    img = load_image(args.input)
    m_f, m_b, palette = _load_pair(args)
    _, guide = quantize_image(img, cfg, palette=palette)
    out = fb_cof(img, guide, m_f, m_b, cfg.filter_params(), include_spatial=not args.no_spatial)
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_recolor(args) -> int:
    cfg = _config(args)
    img = load_image(args.input)
    m_f, m_b, palette = _load_pair(args)
    _, guide = quantize_image(img, cfg, palette=palette)
    out = selective_gray(img, guide, m_f, m_b, cfg.filter_params())
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_mask(args) -> int:
    cfg = _config(args)
    img = load_image(args.input)
    scribbles = read_scribbles(args.scribbles, img.shape[:2])
    if not (scribbles == SCRIBBLE_FG).any():
        raise ValueError(f"{args.scribbles}: no foreground (red) strokes found")
    palette, guide = quantize_image(img, cfg)
    m_t = build_matrix(guide, palette, cfg)
    mask = propagate_scribbles(
        scribbles, guide, m_t, cfg.filter_params(),
        threshold=args.threshold, rounds=args.rounds,
    )
    save_image(mask.astype(np.float64), args.output)
    print(f"wrote {args.output} (foreground {mask.mean():.1%})")
    return 0


def cmd_cooc(args) -> int:
    cfg = _config(args).updated({"matrix_out": args.output, "iterations": 0})
    execute_pipeline(cfg, load_image(args.input))
    print(f"wrote {args.output}")
    return 0


def cmd_fixtures(args) -> int:
    img = make_fixture(args.name, size=args.size, noise_sigma=args.noise, seed=args.seed)
    save_image(img, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_bench(args) -> int:
    report = run_bench(size=args.size, window=args.window, k=args.k, seed=args.seed)
    print(format_report(report))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from cofkit.appshell.service import create_app

    app = create_app(max_sessions=args.max_sessions)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cofkit",
        description="Boundary-preserving filtering driven by pixel co-occurrence statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="smooth an image, preserving texture boundaries")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.png")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("iterate", help="run several passes and record per-pass drift as CSV")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.csv")
    p.add_argument("--image-out", dest="image_out", metavar="PNG", help="also save the final image")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("fb", help="keep foreground sharp, smooth background (two saved matrices)")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.png")
    p.add_argument("--matrix-fg", required=True, metavar="JSON")
    p.add_argument("--matrix-bg", required=True, metavar="JSON")
    p.add_argument("--no-spatial", action="store_true", help="unweighted window statistics")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_fb)

    p = sub.add_parser("recolor", help="keep foreground in color, fade background to gray")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.png")
    p.add_argument("--matrix-fg", required=True, metavar="JSON")
    p.add_argument("--matrix-bg", required=True, metavar="JSON")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_recolor)

    p = sub.add_parser("mask", help="grow a foreground mask from stroke scribbles")
    p.add_argument("scribbles", metavar="STROKES.png", help="red strokes = foreground, blue = background")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.png")
    p.add_argument("--threshold", type=float, default=0.5, help="cut at this fraction of the peak response")
    p.add_argument("--rounds", type=int, default=5, help="propagation passes")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("cooc", help="compute and save the matrix+palette for reuse")
    p.add_argument("input", metavar="IN.png")
    p.add_argument("-o", "--output", required=True, metavar="OUT.json")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_cooc)

    p = sub.add_parser("fixtures", help="emit a synthetic test image")
    p.add_argument("name", choices=FIXTURE_NAMES)
    p.add_argument("-o", "--output", required=True, metavar="OUT.png")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("bench", help="time the pipeline stages on a synthetic image")
    p.add_argument("--size", type=int, default=1024)
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--max-sessions", dest="max_sessions", type=int, default=8)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StageError, DecodeError, EncodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
