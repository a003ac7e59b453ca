"""Command-line interface.

Subcommands: index, query, bench, features, serve. Option values resolve
as defaults < config file < explicit flags; the config file holds one
`key = value` pair per line with `#` comments. The only environment
variable consulted is PATCHSIM_LOG_LEVEL.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .errors import InvalidParamsError, PatchSimError
from .features import FeatureParams, feature_vector, normalize_minmax, params_from_mapping
from .features import FEATURE_NAMES
from .grid_features import build_feature_matrix
from .image import annotate, extract_patches, load_image, save_png, to_grayscale
from .kdtree import kd_build
from .nnsearch import (
    METHOD_BRUTE,
    METHOD_KDTREE,
    METHODS,
    METRIC_COSINE,
    METRICS,
    benchmark,
    query,
)
from .store import load_index, save_index

log = logging.getLogger("patchsim")

DEFAULT_PATCH_SIZE = 32
DEFAULT_K = 5

QUERY_MARK = (64, 220, 64)
NEIGHBOR_MARK = (255, 64, 64)

# (flag, converter) pairs; flag names double as config keys with
# hyphens/underscores interchangeable.
_FEATURE_FLAGS = [
    ("lbp-points", int, "sampled neighbors per pixel"),
    ("lbp-radius", int, "sampling circle radius in pixels"),
    ("glcm-offset", str, "co-occurrence displacement as 'dx,dy'"),
    ("glcm-levels", int, "co-occurrence quantization levels"),
    ("gabor-lambda", float, "carrier wavelength in pixels"),
    ("gabor-theta", float, "filter orientation in radians"),
    ("gabor-psi", float, "carrier phase offset in radians"),
    ("gabor-sigma", float, "gaussian envelope width"),
    ("gabor-gamma", float, "envelope aspect ratio"),
]

_COMMON_FLAGS = {
    "patch-size": int,
    "k": int,
    "method": str,
    "metric": str,
}


def _dest(flag: str) -> str:
    return flag.replace("-", "_")


def read_config(path) -> dict[str, str]:
    """Parse `key = value` lines; unknown keys are rejected at use time."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise InvalidParamsError(
                    f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}"
                )
            out[_dest(key.strip())] = value.strip()
    return out


class _Options:
    """Layered option lookup: CLI flag if given, else config, else default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = read_config(args.config) if getattr(args, "config", None) else {}
        known = {_dest(f) for f, _, _ in _FEATURE_FLAGS}
        known |= {_dest(f) for f in _COMMON_FLAGS}
        unknown = set(self.config) - known
        if unknown:
            raise InvalidParamsError(
                f"unknown config keys: {', '.join(sorted(unknown))}"
            )

    def get(self, flag: str, conv, default=None):
        dest = _dest(flag)
        cli_val = getattr(self.args, dest, None)
        if cli_val is not None:
            return cli_val
        if dest in self.config:
            try:
                return conv(self.config[dest])
            except (TypeError, ValueError) as exc:
                raise InvalidParamsError(
                    f"bad config value for {flag}: {self.config[dest]!r}"
                ) from exc
        return default

    def feature_params(self) -> FeatureParams:
        mapping = {}
        for flag, conv, _ in _FEATURE_FLAGS:
            value = self.get(flag, conv)
            if value is not None:
                mapping[_dest(flag)] = value
        return params_from_mapping(mapping)


def _add_feature_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("feature parameters")
    for flag, conv, help_text in _FEATURE_FLAGS:
        group.add_argument(f"--{flag}", type=conv, default=None, help=help_text)


def _add_config_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="key = value options file")


def _emit_json(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _pipeline(image_path, patch_size: int, params: FeatureParams):
    raster = load_image(image_path)
    gray = to_grayscale(raster)
    grid = extract_patches(gray, patch_size)
    matrix = normalize_minmax(build_feature_matrix(grid, params))
    return raster, grid, matrix


def _obtain_matrix(opts: _Options, args):
    """Matrix from --index when readable, else computed from the image."""
    patch_size = opts.get("patch-size", int, DEFAULT_PATCH_SIZE)
    params = opts.feature_params()
    index_path = getattr(args, "index", None)
    if index_path and os.path.exists(index_path):
        matrix = load_index(index_path)
        raster = load_image(args.image) if args.image else None
        if raster is not None and raster.shape[:2] != (
            matrix.grid.height,
            matrix.grid.width,
        ):
            raise InvalidParamsError(
                f"index is for a {matrix.grid.height}x{matrix.grid.width} image "
                f"but {args.image} is {raster.shape[0]}x{raster.shape[1]}"
            )
        return raster, matrix
    if not args.image:
        raise InvalidParamsError("either an image or an existing --index is required")
    raster, _, matrix = _pipeline(args.image, patch_size, params)
    return raster, matrix


# ---------------------------------------------------------------- commands


def cmd_index(args) -> int:
    opts = _Options(args)
    patch_size = opts.get("patch-size", int, DEFAULT_PATCH_SIZE)
    params = opts.feature_params()
    t0 = time.perf_counter()
    _, grid, matrix = _pipeline(args.image, patch_size, params)
    elapsed = time.perf_counter() - t0
    save_index(args.index, matrix)
    log.info("indexed %s in %.3fs", args.image, elapsed)
    _emit_json(
        {
            "image": str(args.image),
            "height": grid.meta.height,
            "width": grid.meta.width,
            "patch_size": patch_size,
            "n_patches": grid.n_patches,
            "build_elapsed_s": elapsed,
            "index": str(args.index),
        },
        args.out_json,
    )
    return 0


def cmd_query(args) -> int:
    opts = _Options(args)
    method = opts.get("method", str, METHOD_BRUTE)
    if method not in METHODS:
        raise InvalidParamsError(f"unknown method {method!r}")
    metric = opts.get("metric", str)
    if metric is not None and metric not in METRICS:
        raise InvalidParamsError(f"unknown metric {metric!r}")
    k = opts.get("k", int, DEFAULT_K)
    raster, matrix = _obtain_matrix(opts, args)
    patch_id = matrix.grid.patch_id(args.x, args.y)
    tree = kd_build(matrix) if method == METHOD_KDTREE else None
    result = query(matrix, patch_id, k, method=method, metric=metric, tree=tree)
    _emit_json(result.to_dict(), args.out_json)
    if args.out_image:
        if raster is None:
            raise InvalidParamsError("--out-image needs the image argument")
        p = matrix.grid.patch_size
        marked = annotate(
            raster,
            [(nb.x, nb.y, p, p) for nb in result.neighbors],
            color=NEIGHBOR_MARK,
        )
        marked = annotate(
            marked, [(result.query_x, result.query_y, p, p)], color=QUERY_MARK
        )
        save_png(marked, args.out_image)
    return 0


def cmd_bench(args) -> int:
    opts = _Options(args)
    k = opts.get("k", int, DEFAULT_K)
    metric = opts.get("metric", str, METRIC_COSINE)
    if metric not in METRICS:
        raise InvalidParamsError(f"unknown metric {metric!r}")
    _, matrix = _obtain_matrix(opts, args)
    patch_id = matrix.grid.patch_id(args.x, args.y)
    report = benchmark(
        matrix, patch_id, k, brute_metric=metric, repeats=args.repeats
    )
    _emit_json(report.to_dict(), args.out_json)
    return 0


def cmd_features(args) -> int:
    opts = _Options(args)
    patch_size = opts.get("patch-size", int, DEFAULT_PATCH_SIZE)
    params = opts.feature_params()
    gray = to_grayscale(load_image(args.image))
    grid = extract_patches(gray, patch_size)
    patch_id = grid.patch_id(args.x, args.y)
    view = grid.view(patch_id)
    vec = feature_vector(view.pixels, params)
    _emit_json(
        {
            "patch_id": patch_id,
            "x": view.x,
            "y": view.y,
            "patch_size": patch_size,
            "features": {name: v for name, v in zip(FEATURE_NAMES, vec.tolist())},
            "vector": vec.tolist(),
        },
        args.out_json,
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(max_sessions=args.max_sessions)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchsim",
        description="Similarity search over overlapping image patches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="extract features and write an index file")
    p_index.add_argument("image", help="PNG or PGM input image")
    p_index.add_argument("--index", required=True, help="output index path")
    p_index.add_argument("--patch-size", type=int, default=None)
    p_index.add_argument("--out-json", default=None, help="write the summary here")
    _add_feature_flags(p_index)
    _add_config_flag(p_index)
    p_index.set_defaults(func=cmd_index)

    p_query = sub.add_parser("query", help="find the patches most similar to a click")
    p_query.add_argument("image", nargs="?", default=None)
    p_query.add_argument("--index", default=None, help="reuse this index if present")
    p_query.add_argument("--x", type=int, required=True, help="clicked row")
    p_query.add_argument("--y", type=int, required=True, help="clicked column")
    p_query.add_argument("--k", type=int, default=None)
    p_query.add_argument("--method", choices=METHODS, default=None)
    p_query.add_argument("--metric", choices=METRICS, default=None)
    p_query.add_argument("--patch-size", type=int, default=None)
    p_query.add_argument("--out-image", default=None, help="annotated PNG path")
    p_query.add_argument("--out-json", default=None)
    _add_feature_flags(p_query)
    _add_config_flag(p_query)
    p_query.set_defaults(func=cmd_query)

    p_bench = sub.add_parser("bench", help="time both search backends on one query")
    p_bench.add_argument("image", nargs="?", default=None)
    p_bench.add_argument("--index", default=None)
    p_bench.add_argument("--x", type=int, required=True)
    p_bench.add_argument("--y", type=int, required=True)
    p_bench.add_argument("--k", type=int, default=None)
    p_bench.add_argument("--metric", choices=METRICS, default=None,
                         help="metric for the exhaustive backend")
    p_bench.add_argument("--patch-size", type=int, default=None)
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--out-json", default=None)
    _add_feature_flags(p_bench)
    _add_config_flag(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_feat = sub.add_parser("features", help="print one patch's feature vector")
    p_feat.add_argument("image")
    p_feat.add_argument("--x", type=int, required=True)
    p_feat.add_argument("--y", type=int, required=True)
    p_feat.add_argument("--patch-size", type=int, default=None)
    p_feat.add_argument("--out-json", default=None)
    _add_feature_flags(p_feat)
    _add_config_flag(p_feat)
    p_feat.set_defaults(func=cmd_features)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--max-sessions", type=int, default=8)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("PATCHSIM_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("patchsim").setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PatchSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
