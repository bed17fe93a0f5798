"""
Command-line front end.

Exit codes: 0 success, 1 usage or parameter error, 2 bad input data,
3 internal failure. Parameter precedence is command-line flag, then JSON
config file (``--config``), then built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from siroc.errors import ParameterError, PlacementError, RasterFormatError, ShapeMismatchError
from siroc.evaluation import (
    calibration_curve,
    confusion,
    macro_average,
    metrics,
    monotonicity_score,
    write_calibration_csv,
    write_metrics_csv,
)
from siroc.morphology import MORPH_ORDERS
from siroc.pipeline import (
    SirocParams,
    run_cva_baseline,
    run_siroc,
    vanilla_params,
    vote_threshold,
)
from siroc.raster_io import (
    FORMATS,
    ImagePair,
    load_confidence,
    load_mask,
    load_raster,
    save_confidence,
    save_mask,
    save_raster,
)
from siroc.synth import SceneSpec, checksums, generate_scene, preset

EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _band_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--bands expects comma-separated integers, got {text!r}") from None


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("SiROC parameters")
    g.add_argument("--config", type=Path, help="JSON file with parameter values")
    g.add_argument("--n-max", type=int, dest="n_max")
    g.add_argument("--e-start", type=int, dest="e_start")
    g.add_argument("--step", type=int, dest="s")
    g.add_argument("--morph-size", type=int, dest="p")
    g.add_argument("--vote", type=float, dest="v")
    g.add_argument("--no-morph", action="store_true", help="skip the morphological profile")
    g.add_argument("--vanilla-hsr", action="store_true", help="single (0, n_max) member, no morphology")
    g.add_argument("--loop-strict", action="store_true", help="stop the ensemble before n reaches n_max")
    g.add_argument("--morph-order", choices=MORPH_ORDERS, dest="morph_order")
    g.add_argument("--bands", type=_band_list, dest="band_indices", help="e.g. 0,1,2")


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON {path}: {exc}") from None


def resolve_params(args: argparse.Namespace) -> SirocParams:
    values = {}
    if getattr(args, "config", None):
        cfg = _read_json(args.config)
        values.update(cfg.get("params", cfg))
    for name in ("n_max", "e_start", "s", "p", "v", "morph_order", "band_indices"):
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    if getattr(args, "no_morph", False):
        values["use_morphology"] = False
    if getattr(args, "loop_strict", False):
        values["loop_strict"] = True
    params = SirocParams.from_dict(values)
    if getattr(args, "vanilla_hsr", False):
        params = vanilla_params(params)
    return params


def _load_pair(pre_path, post_path) -> ImagePair:
    return ImagePair(load_raster(pre_path), load_raster(post_path))


def _digest(section: dict) -> str:
    return hashlib.sha256(json.dumps(section, sort_keys=True).encode()).hexdigest()


def _write_manifest(out: Path, section: dict, started: float) -> None:
    manifest = dict(section)
    manifest["digest"] = _digest(section)
    manifest["wall_time_s"] = round(time.perf_counter() - started, 4)
    (out / "run.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_maps(out: Path, mask: np.ndarray, confidence: np.ndarray, fmt: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    save_mask(mask, out / "mask.png")
    save_confidence(confidence, out / "confidence.png")
    if fmt != "png":
        ext = ".raw" if fmt == "raw" else ".tif"
        save_confidence(confidence, out / f"confidence{ext}", fmt)


def cmd_detect(args) -> int:
    started = time.perf_counter()
    params = resolve_params(args)
    pair = _load_pair(args.pre, args.post)
    result = run_siroc(pair, params)
    out = Path(args.out)
    _write_maps(out, result.mask, result.confidence, args.format)
    section = {
        "method": "vanilla-hsr" if args.vanilla_hsr else "siroc",
        "inputs": {"pre": str(args.pre), "post": str(args.post)},
        "params": params.to_dict(),
        "member_count": result.member_count,
        "members": [[a.e, a.n] for a in result.members],
        "otsu_thresholds": [o.threshold for o in result.thresholds],
        "changed_pixels": int(result.mask.sum()),
    }
    _write_manifest(out, section, started)
    print(f"F={result.member_count} changed={section['changed_pixels']} -> {out}")
    return 0


def cmd_baseline(args) -> int:
    started = time.perf_counter()
    params = resolve_params(args)
    pair = _load_pair(args.pre, args.post)
    mask = run_cva_baseline(
        pair,
        use_morphology=args.morph,
        p=params.p,
        morph_order=params.morph_order,
        band_indices=params.band_indices,
    )
    out = Path(args.out)
    _write_maps(out, mask, mask.astype(np.float64), args.format)
    section = {
        "method": "cva",
        "inputs": {"pre": str(args.pre), "post": str(args.post)},
        "params": {
            "use_morphology": bool(args.morph),
            "p": params.p,
            "morph_order": params.morph_order,
            "band_indices": None if params.band_indices is None else list(params.band_indices),
        },
        "member_count": 1,
        "changed_pixels": int(mask.sum()),
    }
    _write_manifest(out, section, started)
    print(f"cva changed={section['changed_pixels']} -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    scenes = []
    masks = args.mask or []
    gts = args.gt or []
    if len(masks) != len(gts):
        raise UsageError("--mask and --gt must be given the same number of times")
    names = args.scene or []
    for i, (m, g) in enumerate(zip(masks, gts)):
        name = names[i] if i < len(names) else Path(m).stem
        scenes.append((name, load_mask(m), load_mask(g)))
    if args.detect:
        params = resolve_params(args)
        for pre, post, g in args.detect:
            mask = run_siroc(_load_pair(pre, post), params).mask
            scenes.append((Path(pre).stem, mask, load_mask(g)))
    if not scenes:
        raise UsageError("nothing to evaluate; pass --mask/--gt or --detect")
    rows = [(name, metrics(confusion(mask, gt))) for name, mask, gt in scenes]
    macro = macro_average([m for _, m in rows]) if len(rows) > 1 else None
    write_metrics_csv(args.out, rows, macro)
    for name, m in rows + ([("MACRO", macro)] if macro else []):
        vals = " ".join(f"{k}={'NA' if v is None else f'{v:.4f}'}" for k, v in m.as_dict().items())
        print(f"{name}: {vals}")
    return 0


def cmd_calibrate(args) -> int:
    if args.buckets < 2:
        raise UsageError("--buckets must be >= 2")
    if not 0 <= args.vote <= 1:
        raise UsageError("--vote must lie in [0, 1]")
    conf = load_confidence(args.confidence)
    gt = load_mask(args.gt)
    mask = load_mask(args.mask) if args.mask else vote_threshold(conf, args.vote)
    curve = calibration_curve(conf, mask, gt, args.buckets, args.strategy)
    write_calibration_csv(args.out, curve)
    score = monotonicity_score(curve)
    print(f"monotonicity: {score:.4f}")
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        try:
            spec = SceneSpec.from_dict(_read_json(args.spec))
        except (TypeError, ValueError) as exc:
            raise InputError(f"invalid scene spec {args.spec}: {exc}") from None
        name = Path(args.spec).stem
    elif args.preset:
        try:
            spec = preset(args.preset)
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        name = args.preset
    else:
        raise UsageError("give a preset name or --spec")
    scene = generate_scene(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_raster(scene.pre, out / "pre.raw")
    save_raster(scene.post, out / "post.raw")
    save_mask(scene.gt, out / "gt.png")
    sums = checksums(scene)
    manifest = {"name": name, "spec": spec.to_dict(), "checksums": sums}
    (out / "scene.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for key, value in sums.items():
        print(f"{key} {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="siroc", description="Unsupervised change detection for bitemporal rasters.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="run SiROC on an image pair")
    p.add_argument("pre", type=Path)
    p.add_argument("post", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="raw", help="extra confidence map format")
    _add_param_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("baseline", help="plain CVA + Otsu baseline")
    p.add_argument("pre", type=Path)
    p.add_argument("post", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="raw")
    p.add_argument("--morph", action="store_true", help="apply the morphological profile")
    _add_param_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="confusion metrics against ground truth")
    p.add_argument("--mask", action="append", type=Path)
    p.add_argument("--gt", action="append", type=Path)
    p.add_argument("--scene", action="append", help="scene label, one per --mask")
    p.add_argument("--detect", nargs=3, action="append", metavar=("PRE", "POST", "GT"))
    p.add_argument("--out", type=Path, required=True)
    _add_param_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", help="precision per confidence bucket")
    p.add_argument("--confidence", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--mask", type=Path, help="predicted mask; default thresholds confidence at --vote")
    p.add_argument("--vote", type=float, default=0.5)
    p.add_argument("--buckets", type=int, default=10)
    p.add_argument("--strategy", choices=("uniform", "quantile"), default="uniform")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("preset", nargs="?")
    p.add_argument("--spec", type=Path, help="SceneSpec JSON file")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"siroc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FileNotFoundError, RasterFormatError, ShapeMismatchError) as exc:
        print(f"siroc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlacementError as exc:
        print(f"siroc: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        print(f"siroc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
