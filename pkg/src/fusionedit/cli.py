"""Command-line interface.

Subcommands: discrepancy, mask, edit, metrics.  A JSON config file supplies
EditConfig fields; individual flags override it.  Exit codes: 0 success,
1 runtime/numeric failure, 2 usage or configuration error.  Log verbosity
comes from FUSIONEDIT_LOG (error, info, debug).
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import metrics as metrics_mod
from .config import EditConfig
from .errors import (ConfigurationError, DataError, FormatError,
                     FusionEditError, ShapeError)
from .maskgen import patch_means, region_grow, soft_mask_from_binary
from .pipeline import MASK_MODES, run_edit
from .providers import provider_from_spec
from .tensorio import export_mask_image, read_tensor, write_tensor

log = logging.getLogger("fusionedit.cli")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

# Flag destinations that override EditConfig fields when given.
_CONFIG_FLAGS = (
    "t_prime", "repeats", "patch_size", "merge_ratio", "d_max", "k", "lam",
    "beta", "gamma", "eta", "steps", "src_guidance", "tar_guidance", "seed",
)


def _setup_logging():
    raw = os.environ.get("FUSIONEDIT_LOG", "").strip().lower()
    level = _LOG_LEVELS.get(raw, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with EditConfig fields")
    p.add_argument("--t-prime", dest="t_prime", type=float)
    p.add_argument("--repeats", type=int)
    p.add_argument("--patch-size", dest="patch_size", type=int)
    p.add_argument("--merge-ratio", dest="merge_ratio", type=float)
    p.add_argument("--d-max", dest="d_max", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--src-guidance", dest="src_guidance", type=float)
    p.add_argument("--tar-guidance", dest="tar_guidance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--tv-every-step", dest="tv_every_step", action="store_true", default=None)
    p.add_argument("--tv-final-only", dest="tv_every_step", action="store_false", default=None)
    p.add_argument("--dam", dest="dam_enabled", action="store_true", default=None)
    p.add_argument("--no-dam", dest="dam_enabled", action="store_false", default=None)


def _build_config(args) -> EditConfig:
    data = {}
    if args.config:
        data.update(EditConfig.from_json(args.config).__dict__)
    for name in _CONFIG_FLAGS + ("tv_every_step", "dam_enabled"):
        v = getattr(args, name, None)
        if v is not None:
            data[name] = v
    return EditConfig.from_dict(data)


def _load_input(path) -> np.ndarray:
    if not os.path.exists(path):
        raise ConfigurationError(f"input file not found: {path}")
    return read_tensor(path)


def _heat_png(s, path):
    peak = float(np.max(s))
    export_mask_image(s / peak if peak > 0 else np.zeros_like(s), path)


def cmd_discrepancy(args) -> int:
    provider = provider_from_spec(args.provider)
    x_src = _load_input(args.source)
    config = _build_config(args)
    from .maskgen import discrepancy_avg

    sbar = discrepancy_avg(provider, x_src, config.t_prime, config.guidance(),
                           config.repeats, config.seed)
    os.makedirs(args.out, exist_ok=True)
    write_tensor(sbar.map, os.path.join(args.out, "sbar.npy"))
    _heat_png(sbar.map, os.path.join(args.out, "sbar.png"))
    print(f"mean={sbar.map.mean():.6g} max={sbar.map.max():.6g}")
    return 0


def cmd_mask(args) -> int:
    if not os.path.exists(args.discrepancy):
        raise ConfigurationError(f"discrepancy file not found: {args.discrepancy}")
    sbar = read_tensor(args.discrepancy)
    if sbar.ndim != 2:
        raise ShapeError(f"discrepancy map must be rank 2, got rank {sbar.ndim}")
    if sbar.min() < 0:
        raise DataError("discrepancy map has negative values")
    config = _build_config(args)

    grid = patch_means(sbar, config.patch_size)
    binary = region_grow(grid, config.merge_ratio)
    if binary.any():
        soft = soft_mask_from_binary(binary, config.d_max, config.k)
    else:
        log.warning("all-zero discrepancy: writing empty masks")
        soft = np.zeros_like(sbar, dtype=np.float64)

    os.makedirs(args.out, exist_ok=True)
    write_tensor(binary.astype(np.float64), os.path.join(args.out, "mask_binary.npy"))
    export_mask_image(binary.astype(np.float64), os.path.join(args.out, "mask_binary.png"))
    write_tensor(soft, os.path.join(args.out, "mask_soft.npy"))
    export_mask_image(soft, os.path.join(args.out, "mask_soft.png"))
    return 0


def cmd_edit(args) -> int:
    provider = provider_from_spec(args.provider)
    x_src = _load_input(args.source)
    config = _build_config(args)

    result = run_edit(provider, x_src, config, mask_mode=args.mask_mode)

    os.makedirs(args.out, exist_ok=True)
    write_tensor(result.sbar.map, os.path.join(args.out, "sbar.npy"))
    _heat_png(result.sbar.map, os.path.join(args.out, "sbar.png"))
    write_tensor(result.binary_mask.astype(np.float64),
                 os.path.join(args.out, "mask_binary.npy"))
    export_mask_image(result.binary_mask.astype(np.float64),
                      os.path.join(args.out, "mask_binary.png"))
    write_tensor(result.soft_mask, os.path.join(args.out, "mask_soft.npy"))
    export_mask_image(result.soft_mask, os.path.join(args.out, "mask_soft.png"))
    write_tensor(result.edited, os.path.join(args.out, "edited.npy"))

    preserved = result.soft_mask < 0.5
    if preserved.any():
        rep = metrics_mod.report(result.edited, np.asarray(x_src, np.float64),
                                 peak=args.peak, mask=preserved)
        out = rep.to_dict()
    else:
        log.warning("mask covers the whole image: no preserved region to score")
        out = {"mse": None, "psnr": None, "ssim": None}
    out["empty_region"] = result.empty_region
    print(json.dumps(out))
    return 0


def cmd_metrics(args) -> int:
    a = _load_input(args.a)
    b = _load_input(args.b)
    mask = None
    if args.mask:
        weights = _load_input(args.mask)
        mask = np.asarray(weights) < 0.5  # preserved region
    rep = metrics_mod.report(a, b, peak=args.peak, mask=mask)
    print(json.dumps(rep.to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fusionedit",
                                     description="Training-free latent editing pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discrepancy", help="write the averaged discrepancy map")
    p.add_argument("--provider", required=True)
    p.add_argument("--source", required=True, help="source latent NPY")
    p.add_argument("--out", default="out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_discrepancy)

    p = sub.add_parser("mask", help="binary + soft mask from a discrepancy map")
    p.add_argument("--discrepancy", required=True, help="rank-2 NPY map")
    p.add_argument("--out", default="out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("edit", help="full pipeline: discrepancy, mask, edit")
    p.add_argument("--provider", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--mask-mode", dest="mask_mode", choices=MASK_MODES, default="soft")
    p.add_argument("--peak", type=float, default=1.0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("metrics", help="MSE / PSNR / SSIM between two tensors")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--mask", help="soft mask NPY; restricts to weights < 0.5")
    p.add_argument("--peak", type=float, default=1.0)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigurationError, FormatError, ShapeError, DataError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error ({args.command}): file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (FusionEditError, OSError, ValueError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
