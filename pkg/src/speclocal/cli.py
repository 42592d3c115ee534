"""Command-line entry point: ``localize``, ``evaluate``, ``proposals`` and ``synth``."""
import argparse
from concurrent.futures import ProcessPoolExecutor
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np
from PIL import Image as PILImage

from .boxes import BoxError
from .evaluation import GroundTruthError, corloc_dataset, load_ground_truth
from .features import CodebookError
from .imgproc import ImageError, load_image
from .pipeline import ConfigError, PipelineConfig, encode_record, localize, read_record, write_atomic
from .proposals import ProposalFormatError, generate_proposals
from .spectral import NumericError
from .synthetic import write_corpus

log = logging.getLogger("speclocal")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2

GREEN = (0, 255, 0)
RED = (255, 0, 0)
LINE = 3

INPUT_ERRORS = (
    OSError, ImageError, ProposalFormatError, GroundTruthError, BoxError, ConfigError,
    CodebookError, ValueError, json.JSONDecodeError,
)
NUMERIC_ERRORS = (NumericError, FloatingPointError, np.linalg.LinAlgError)


def exit_code_for(exc):
    if isinstance(exc, NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(exc, INPUT_ERRORS):
        return EXIT_INPUT
    raise exc


def _draw_frame(rgb, box, color, width=LINE):
    height, img_w = rgb.shape[:2]
    x1, y1 = max(int(box.x), 0), max(int(box.y), 0)
    x2, y2 = min(int(box.x2), img_w), min(int(box.y2), height)
    if x2 <= x1 or y2 <= y1:
        return
    t = min(width, x2 - x1, y2 - y1)
    rgb[y1 : y1 + t, x1:x2] = color
    rgb[y2 - t : y2, x1:x2] = color
    rgb[y1:y2, x1 : x1 + t] = color
    rgb[y1:y2, x2 - t : x2] = color


def render_overlay(img, pred, gts, path):
    """Write a PNG with a 3-px red frame per ground truth and a 3-px green frame for ``pred``.

    The prediction is drawn last, so it sits on top where the frames coincide.
    Frames are clipped to the image.  Returns the RGB array written.
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        a = np.repeat(a[:, :, None], 3, axis=2)
    rgb = np.round(np.clip(a, 0.0, 1.0) * 255).astype(np.uint8)
    for g in gts or ():
        _draw_frame(rgb, g, RED)
    if pred is not None:
        _draw_frame(rgb, pred, GREEN)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(rgb, mode="RGB").save(path, format="PNG")
    return rgb


def worker_count(jobs):
    raw = os.environ.get("SPECLOCAL_THREADS", "").strip()
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer SPECLOCAL_THREADS=%r", raw)
    return max(1, min(cap, jobs))


def _config(args):
    return PipelineConfig(
        N=args.n_proposals, T=args.stop_t, k=args.knn_k, C=args.top_c,
        sigma_scale=args.sigma_scale, seed=args.seed,
    )


def _companion(option, image, multi, suffixes):
    """Resolve a per-image side file: the path itself, or ``<dir>/<stem><suffix>``."""
    if option is None:
        return None
    option = Path(option)
    if not multi and not option.is_dir():
        return option
    for suffix in suffixes:
        candidate = option / f"{Path(image).stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def _localize_one(job):
    image, cfg, proposals, saliency, out, overlay, gts, dump = job
    try:
        result, record = localize(image, cfg, proposals, saliency, out, descriptor_dump=dump)
        if overlay is not None:
            render_overlay(load_image(image), result.b_final, gts, overlay)
        return image, record, None, None
    except Exception as exc:
        return image, None, exit_code_for(exc), f"{type(exc).__name__}: {exc}"


def cmd_localize(args):
    cfg = _config(args)
    images = [Path(p) for p in args.images]
    multi = len(images) > 1
    out_dir = Path(args.out) if args.out and (multi or Path(args.out).is_dir()) else None
    gt = load_ground_truth(args.gt) if args.gt else {}

    jobs = []
    for image in images:
        stem = image.stem
        if out_dir is not None:
            out = out_dir / f"{stem}.json"
        else:
            out = Path(args.out) if args.out else None
        overlay = None
        if args.overlay:
            overlay = Path(args.overlay) / f"{stem}.png" if multi else Path(args.overlay)
        dump = None
        if args.dump_descriptors:
            dump = Path(args.dump_descriptors) / f"{stem}.f32" if multi else Path(args.dump_descriptors)
        jobs.append((
            image, cfg,
            _companion(args.proposals, image, multi, (".txt", ".csv")),
            _companion(args.saliency, image, multi, (".png", ".pgm", ".bmp")),
            out, overlay, [b for _, b in gt.get(stem, [])], dump,
        ))

    workers = worker_count(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_localize_one, jobs))
    else:
        outcomes = [_localize_one(j) for j in jobs]

    status = EXIT_OK
    for image, record, code, message in outcomes:
        if record is None:
            log.error("%s: %s", image, message)
            status = max(status, code)
            continue
        if args.trace:
            for i, step in enumerate(record["filter"]["trace"]):
                print(
                    f"{record['image_id']} iter {i}: {step['size_before']} -> {step['size_kept']} "
                    f"(kept {step['score_kept']:.4f}, dropped {step['score_discarded']:.4f}, "
                    f"sigma {step['sigma']:.4f})",
                    file=sys.stderr,
                )
        if args.out is None:
            sys.stdout.write(encode_record(record).decode("utf-8"))
        else:
            b = record["b_final"]
            print(f"{record['image_id']} {record['status']} " + (" ".join(map(str, b)) if b else "-"))
    return status


def cmd_evaluate(args):
    results_dir = Path(args.results)
    if not results_dir.is_dir():
        raise GroundTruthError(f"{results_dir}: not a directory")
    files = sorted(results_dir.glob("*.json"))
    if not files:
        raise GroundTruthError(f"{results_dir}: no result records (*.json)")
    results = {}
    for f in files:
        image_id, box, _ = read_record(f)
        if image_id in results:
            raise GroundTruthError(f"{f}: duplicate result for image id {image_id!r}")
        results[image_id] = box
    report = corloc_dataset(results, load_ground_truth(args.gt))
    print(report.format_table())
    if args.json:
        write_atomic(args.json, (json.dumps(report.as_dict(), indent=1, sort_keys=True) + "\n").encode())
    return EXIT_OK


def cmd_proposals(args):
    image = Path(args.image)
    pset = generate_proposals(load_image(image), args.n_proposals, args.seed, image_id=image.stem)
    lines = ["# x y w h score"]
    lines += [f"{x} {y} {w} {h} {s:.10g}" for (x, y, w, h), s in zip(pset.boxes.tolist(), pset.s_obj)]
    text = "\n".join(lines) + "\n"
    if pset.flags:
        log.warning("%s: %s", image, ", ".join(pset.flags))
    if args.out:
        write_atomic(args.out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args):
    paths = write_corpus(args.directory, args.count, args.seed)
    print(f"wrote {len(paths)} images and ground_truth.txt to {args.directory}")
    return EXIT_OK


def build_parser():
    defaults = PipelineConfig()
    parser = argparse.ArgumentParser(
        prog="speclocal", description="Unsupervised single-object localisation."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    loc = sub.add_parser("localize", help="localise the dominant object in one or more images")
    loc.add_argument("images", nargs="+", help="input image file(s)")
    loc.add_argument("--proposals", help="proposal file, or a directory of <stem>.txt files")
    loc.add_argument("--saliency", help="saliency map image, or a directory of <stem>.png files")
    loc.add_argument("--out", help="result record path (a directory when several images are given)")
    loc.add_argument("--overlay", help="overlay PNG path (a directory when several images are given)")
    loc.add_argument("--gt", help="ground-truth file whose boxes are drawn in red on overlays")
    loc.add_argument("--n-proposals", type=int, default=defaults.N, help="proposals per image (N)")
    loc.add_argument("--stop-t", type=int, default=defaults.T, help="filtering stop size (T)")
    loc.add_argument("--knn-k", type=int, default=defaults.k, help="group size (k)")
    loc.add_argument("--top-c", type=int, default=defaults.C, help="groups merged (C)")
    loc.add_argument("--sigma-scale", type=float, default=defaults.sigma_scale,
                     help="similarity width as a fraction of the largest feature distance")
    loc.add_argument("--seed", type=int, default=defaults.seed)
    loc.add_argument("--trace", action="store_true", help="print the filtering trace to stderr")
    loc.add_argument("--dump-descriptors", metavar="PATH",
                     help="write dense descriptors as little-endian float32 rows")
    loc.set_defaults(func=cmd_localize)

    ev = sub.add_parser("evaluate", help="CorLoc of a directory of result records")
    ev.add_argument("results", help="directory of *.json result records")
    ev.add_argument("gt", help="ground-truth file: image_id class x y w h per line")
    ev.add_argument("--json", help="also write the report as JSON")
    ev.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("proposals", help="write built-in proposals as 'x y w h score' lines")
    pr.add_argument("image")
    pr.add_argument("--n-proposals", type=int, default=defaults.N)
    pr.add_argument("--seed", type=int, default=defaults.seed)
    pr.add_argument("--out", help="output file (default stdout)")
    pr.set_defaults(func=cmd_proposals)

    sy = sub.add_parser("synth", help="write the synthetic textured-rectangle corpus")
    sy.add_argument("directory")
    sy.add_argument("--count", type=int, default=50)
    sy.add_argument("--seed", type=int, default=2024)
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:
        code = exit_code_for(exc)
        log.error("%s", exc)
        return code


if __name__ == "__main__":
    sys.exit(main())
