"""Command-line entry point: detect, evaluate and inspect subcommands.

Each run writes into one output directory: a ``manifest.json`` holding the
effective configuration and per-image status, plus one subdirectory per
image with the saliency JSON, mask and overlay PNGs, and (optionally) the
per-patch weight CSV. Exit codes: 0 success, 1 runtime failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import evaluate as ev
from .config import ENV_SEED, RunConfig, parse_config_file
from .errors import HebbsalError, ValidationError
from .ingest import decompose_layers, load_image, load_roi_map, split_channels
from .lateral import (
    SaliencyGrid,
    detect,
    saliency_to_json_dict,
    salient_mask_array,
)

STAGES = ("channels", "layers", "weights")


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output directory for this run")
    p.add_argument("--seed", type=int, help="global RNG seed")
    p.add_argument("--workers", type=int, help="parallel image workers")
    p.add_argument("--epsilon", type=float, help="intensity layer step (1/num_layers)")
    p.add_argument("--patch-size", type=int, dest="patch_size")
    p.add_argument("--dissim-threshold", type=float, dest="dissim_threshold")
    p.add_argument("--count-threshold", type=int, dest="count_threshold")
    p.add_argument("--no-absolute-dot", action="store_true", dest="no_absolute_dot",
                   help="compare raw signed dot products")
    p.add_argument("--emit-diagnostics", action="store_true", dest="emit_diagnostics",
                   help="also write per-patch weight CSVs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hebbsal",
        description="Bottom-up saliency detection from intensity-layer patch "
                    "statistics, with ROI-map evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="detect salient patches in images")
    p_detect.add_argument("images", nargs="+", help="input PNG/PPM files")
    _add_common_options(p_detect)

    p_eval = sub.add_parser("evaluate", help="score detections against ROI maps")
    p_eval.add_argument("--pred", nargs="+", required=True,
                        help="saliency JSONs or input images")
    p_eval.add_argument("--roi", nargs="+", required=True,
                        help="ROI maps (grayscale PNG or CSV), paired in order")
    _add_common_options(p_eval)

    p_inspect = sub.add_parser("inspect", help="dump intermediate pipeline stages")
    p_inspect.add_argument("image", help="input PNG/PPM file")
    p_inspect.add_argument("--stage", choices=STAGES, required=True)
    _add_common_options(p_inspect)

    return parser


def _effective_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file, environment seed and flags (flags win)."""
    mapping = parse_config_file(args.config) if args.config else {}
    if args.seed is not None:
        mapping["seed"] = args.seed
    elif "seed" not in mapping and os.environ.get(ENV_SEED):
        mapping["seed"] = os.environ[ENV_SEED]
    for key in ("workers", "epsilon", "patch_size", "dissim_threshold",
                "count_threshold"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    if args.no_absolute_dot:
        mapping["use_absolute_dot"] = False
    if args.emit_diagnostics:
        mapping["emit_diagnostics"] = True
    if args.out:
        mapping["output_dir"] = args.out
    return RunConfig.from_mapping(mapping)


def _save_png(path: Path, array: np.ndarray, mode: str) -> None:
    Image.fromarray(array, mode=mode).save(path, format="PNG")


def _image_to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def _write_weight_csv(path: Path, grid: SaliencyGrid) -> None:
    lines = ["channel,layer,row,col,w1,w2,status"]
    for ch in grid.channels:
        for layer_grid in grid.weight_grids[ch]:
            rows, cols = layer_grid.shape
            for r in range(rows):
                for c in range(cols):
                    w = layer_grid.weight_at(r, c)
                    status = layer_grid.status[r, c]
                    if w is None:
                        lines.append(f"{ch},{layer_grid.layer_index},{r},{c},,,{status}")
                    else:
                        lines.append(f"{ch},{layer_grid.layer_index},{r},{c},"
                                     f"{w.w1:.17g},{w.w2:.17g},{status}")
    path.write_text("\n".join(lines) + "\n")


def _detect_one(image_path: str, image_dir: Path, cfg: RunConfig) -> dict:
    """Process one image and write its outputs; returns a manifest entry."""
    img = load_image(image_path, pad_multiple=cfg.patch_size)
    grid = detect(img, cfg.saliency, cfg.learn, num_layers=cfg.num_layers,
                  patch_size=cfg.patch_size, seed=cfg.seed)

    image_dir.mkdir(parents=True, exist_ok=True)
    json_path = image_dir / "saliency.json"
    json_path.write_text(json.dumps(saliency_to_json_dict(grid), indent=2) + "\n")
    mask_path = image_dir / "salient_mask.png"
    _save_png(mask_path, salient_mask_array(grid, cfg.patch_size), "L")
    overlay = ev.render_overlay(img, grid.salient, patch_size=cfg.patch_size)
    overlay_path = image_dir / "overlay.png"
    _save_png(overlay_path, _image_to_uint8(overlay.pixels), "RGB")
    outputs = {"saliency": json_path.name, "mask": mask_path.name,
               "overlay": overlay_path.name}
    if cfg.emit_diagnostics:
        csv_path = image_dir / "weights.csv"
        _write_weight_csv(csv_path, grid)
        outputs["weights"] = csv_path.name
    return {"input": str(image_path), "status": "ok", "outputs": outputs}


def _unique_stems(paths: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    stems = []
    for p in paths:
        stem = Path(p).stem or "image"
        seen[stem] = seen.get(stem, 0) + 1
        stems.append(stem if seen[stem] == 1 else f"{stem}_{seen[stem]}")
    return stems


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stems = _unique_stems(args.images)

    entries: list[dict | None] = [None] * len(args.images)
    if cfg.workers > 1 and len(args.images) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(_detect_worker, args.images[i],
                                   str(out_dir / stems[i]), cfg): i
                       for i in range(len(args.images))}
            for fut, i in futures.items():
                entries[i] = fut.result()
    else:
        for i in range(len(args.images)):
            entries[i] = _detect_worker(args.images[i], str(out_dir / stems[i]), cfg)

    manifest = {"config": cfg.to_dict(), "images": entries}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    failed = [e for e in entries if e["status"] != "ok"]
    for e in failed:
        print(f"error: {e['input']}: {e['error']}", file=sys.stderr)
    return 1 if failed else 0


def _detect_worker(image_path: str, image_dir: str, cfg: RunConfig) -> dict:
    # Top-level so ProcessPoolExecutor can pickle it.
    try:
        return _detect_one(image_path, Path(image_dir), cfg)
    except (HebbsalError, OSError) as exc:
        return {"input": str(image_path), "status": "error", "error": str(exc)}


def _salient_from_json(path: str) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    try:
        rows, cols = int(data["height_patches"]), int(data["width_patches"])
        flat = data["salient"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: not a saliency JSON") from exc
    if len(flat) != rows * cols:
        raise ValidationError(f"{path}: salient array length mismatch")
    return np.asarray(flat, dtype=bool).reshape(rows, cols)


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    if len(args.pred) != len(args.roi):
        raise ValidationError(
            f"{len(args.pred)} predictions cannot pair with {len(args.roi)} ROI maps")
    out_dir = Path(cfg.output_dir)

    reports = []
    overlays = []
    for pred_path, roi_path in zip(args.pred, args.roi):
        name = Path(pred_path).stem
        if pred_path.lower().endswith(".json"):
            salient = _salient_from_json(pred_path)
            img = None
        else:
            img = load_image(pred_path, pad_multiple=cfg.patch_size)
            grid = detect(img, cfg.saliency, cfg.learn, num_layers=cfg.num_layers,
                          patch_size=cfg.patch_size, seed=cfg.seed)
            salient = grid.salient
        rows, cols = salient.shape
        target = (cols * cfg.patch_size, rows * cfg.patch_size)
        roi = load_roi_map(roi_path, target, patch_size=cfg.patch_size)
        reports.append(ev.evaluate_image(name, salient, roi, cfg.patch_size))
        if img is not None:
            overlays.append((name, ev.render_overlay(img, salient, roi,
                                                     cfg.patch_size)))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.csv").write_text(ev.reports_to_csv(reports))
    payload = [ev.report_to_json_dict(r) for r in reports]
    (out_dir / "eval.json").write_text(json.dumps(payload, indent=2) + "\n")
    for name, overlay in overlays:
        _save_png(out_dir / f"{name}_overlay.png",
                  _image_to_uint8(overlay.pixels), "RGB")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img = load_image(args.image, pad_multiple=cfg.patch_size)
    planes = split_channels(img)

    if args.stage == "channels":
        for plane in planes:
            _save_png(out_dir / f"channel_{plane.channel}.png",
                      _image_to_uint8(plane.values), "L")
    elif args.stage == "layers":
        for plane in planes:
            for layer in decompose_layers(plane, cfg.epsilon):
                _save_png(out_dir / f"layer_{plane.channel}_{layer.layer_index:02d}.png",
                          layer.mask.astype(np.uint8) * 255, "L")
    else:
        grid = detect(img, cfg.saliency, cfg.learn, num_layers=cfg.num_layers,
                      patch_size=cfg.patch_size, seed=cfg.seed)
        _write_weight_csv(out_dir / "weights.csv", grid)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"detect": cmd_detect, "evaluate": cmd_evaluate,
                "inspect": cmd_inspect}
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HebbsalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
