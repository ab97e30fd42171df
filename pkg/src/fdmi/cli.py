"""Command-line front end.

Every run that writes files also writes a JSON manifest (subcommand,
resolved parameters, inputs, outputs, version, seed, duration) next to its
outputs; ``fdmi replay MANIFEST`` re-executes it. Failures print a single
JSON line ``{"error": ..., "exit_code": ..., "message": ...}`` to stderr.

Exit codes: 0 success, 2 usage, 3 validation, 4 computation, 5 I/O.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import StarChart, detect_plan, measure_limiting_radius, psnr, siemens_star
from .codec import CaptureConfig, decode_all, encode, extract_sideband, render_slm_masks, simulate_capture
from .exceptions import FDMIError, ParseError, PlanningError, UnresolvableError, ValidationError
from .flow import estimate_flow, interpolate_frames
from .fourier import forward_spectrum, log_magnitude
from .imageio import read_image, read_plan, write_flow, write_image, write_json, write_plan
from .masks import make_mask
from .plan import plan_sidebands

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_COMPUTATION = 4
EXIT_IO = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonnegative_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _radius(text):
    if text == "auto":
        return text
    value = _nonnegative_float(text)
    if value == 0:
        raise argparse.ArgumentTypeError("radius must be positive")
    return value


def _fraction(text):
    value = _nonnegative_float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def build_parser():
    p = _Parser(prog="fdmi", description="Frequency-division multiplexed imaging tools.")
    p.add_argument("--version", action="version", version=f"fdmi {__version__}")
    p.add_argument("--manifest", help="manifest path (default: next to the outputs)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("plan", help="lay out non-overlapping sidebands")
    s.add_argument("n", type=_positive_int)
    s.add_argument("--waveform", choices=("cosine", "square"), default="cosine")
    s.add_argument("--radius", type=_radius, default="auto", help='band radius in cycles/pixel, or "auto"')
    s.add_argument("--baseband-radius", type=_radius, default=None)
    s.add_argument("--width", type=_positive_int, help="snap carriers to the bins of this image width")
    s.add_argument("--height", type=_positive_int)
    s.add_argument("--out", help="plan JSON (default: stdout)")

    s = sub.add_parser("mask", help="render one exposure mask of a plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--width", type=_positive_int, required=True)
    s.add_argument("--height", type=_positive_int, required=True)
    s.add_argument("--pitch", type=float, default=1.0, help="sensor pixels per SLM pixel")
    s.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="simulate a coded capture of a frame sequence")
    s.add_argument("--plan", required=True)
    s.add_argument("--frames", nargs="+", required=True)
    s.add_argument("--durations", nargs="+", type=_nonnegative_float)
    s.add_argument("--pitch", type=float, default=1.0)
    s.add_argument("--noise", type=_nonnegative_float, default=0.0, help="Gaussian noise sigma")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--normalization", choices=("average", "sum"), default="average")
    s.add_argument("--out", required=True)
    s.add_argument("--spectrum-out")

    s = sub.add_parser("decode", help="recover sub-exposure frames from a capture")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--plan")
    src.add_argument("--auto-detect", action="store_true", help="find carriers in the spectrum")
    s.add_argument("--count", type=_positive_int, help="number of carriers to auto-detect")
    s.add_argument("--coded", required=True)
    s.add_argument("--outdir", required=True)
    s.add_argument("--baseband", action="store_true")
    s.add_argument("--durations", nargs="+", type=_nonnegative_float)
    s.add_argument("--normalization", choices=("average", "sum"), default="average")
    s.add_argument("--reference", nargs="+", help="ground-truth frames for a PSNR report")
    s.add_argument("--spectrum-out")
    s.add_argument("--format", choices=("pfm", "p5-8", "p5-16"), default="pfm")

    s = sub.add_parser("star", help="Siemens-star resolution measurement")
    s.add_argument("--cycles", type=_positive_int, default=36)
    s.add_argument("--size", type=_positive_int, default=512)
    s.add_argument("--threshold", type=_fraction, default=0.1)
    s.add_argument("--through-plan", help="image the star through one entry of this plan")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--out", help="report JSON (default: stdout)")
    s.add_argument("--csv", help="contrast profile CSV")

    s = sub.add_parser("flow", help="interpolate frames between two images")
    s.add_argument("--a", required=True, dest="img_a")
    s.add_argument("--b", required=True, dest="img_b")
    s.add_argument("--frames", type=_positive_int, default=16)
    s.add_argument("--alpha", type=float, default=20.0)
    s.add_argument("--outdir", required=True)
    s.add_argument("--format", choices=("pfm", "p5-8", "p5-16"), default="pfm")

    s = sub.add_parser("replay", help="re-run the invocation recorded in a manifest")
    s.add_argument("manifest_path")
    return p


def _frame_name(outdir, prefix, i, fmt):
    ext = ".pfm" if fmt == "pfm" else ".pgm"
    return os.path.join(outdir, f"{prefix}_{i:02d}{ext}")


def _plan_for_index(plan, index):
    if not -len(plan) <= index < len(plan):
        raise ValidationError(f"index {index} out of range for a {len(plan)}-entry plan")
    return plan.entries[index]


def cmd_plan(args):
    if (args.width is None) != (args.height is None):
        raise ValidationError("--width and --height must be given together")
    shape = None if args.width is None else (args.height, args.width)
    plan = plan_sidebands(args.n, args.waveform, args.radius, baseband_radius=args.baseband_radius, shape=shape)
    outputs = []
    if args.out:
        write_plan(args.out, plan)
        outputs.append(args.out)
    else:
        print(plan.to_json(indent=2))
    return {"params": {"band_radius": plan.entries[0].band_radius}, "inputs": [], "outputs": outputs}


def cmd_mask(args):
    plan = read_plan(args.plan)
    entry = _plan_for_index(plan, args.index)
    if not np.isfinite(args.pitch) or args.pitch < 1:
        raise ValidationError(f"pitch must be >= 1, got {args.pitch}")
    single = type(plan)((entry,), plan.baseband_radius)
    mask = render_slm_masks(single, (args.height, args.width), args.pitch)[0]
    write_image(args.out, mask)
    return {"params": {}, "inputs": [args.plan], "outputs": [args.out]}


def cmd_simulate(args):
    plan = read_plan(args.plan)
    config = CaptureConfig(plan, args.durations, args.pitch, args.noise, args.normalization)
    if len(args.frames) != len(plan):
        raise ValidationError(f"count mismatch: {len(args.frames)} frames for a {len(plan)}-entry plan")
    frames = [read_image(f) for f in args.frames]
    coded = simulate_capture(config, frames, rng=args.seed)
    write_image(args.out, coded)
    outputs = [args.out]
    if args.spectrum_out:
        write_image(args.spectrum_out, log_magnitude(forward_spectrum(coded)))
        outputs.append(args.spectrum_out)
    params = {"durations": config.durations and list(config.durations), "seed": args.seed}
    return {"params": params, "inputs": [args.plan] + list(args.frames), "outputs": outputs}


def cmd_decode(args):
    coded = read_image(args.coded)
    inputs = [args.coded]
    if args.auto_detect:
        plan = detect_plan(coded, args.count)
    else:
        plan = read_plan(args.plan)
        inputs.append(args.plan)
    refs = None
    if args.reference:
        if len(args.reference) != len(plan):
            raise ValidationError(f"count mismatch: {len(args.reference)} references for {len(plan)} frames")
        refs = [read_image(r) for r in args.reference]
        inputs.extend(args.reference)
    frames = decode_all(coded, plan, args.baseband, args.durations, args.normalization)
    os.makedirs(args.outdir, exist_ok=True)
    outputs = []
    for i in range(len(plan)):
        path = _frame_name(args.outdir, "frame", i, args.format)
        write_image(path, frames[i], args.format)
        outputs.append(path)
    if args.baseband:
        path = _frame_name(args.outdir, "baseband", 0, args.format)
        write_image(path, frames[-1], args.format)
        outputs.append(path)
    report = {"plan": plan.to_dict(), "frames": outputs[: len(plan)]}
    if refs is not None:
        report["psnr_db"] = [_json_float(psnr(frames[i], refs[i])) for i in range(len(plan))]
    if args.spectrum_out:
        write_image(args.spectrum_out, log_magnitude(forward_spectrum(coded)))
        outputs.append(args.spectrum_out)
    report_path = os.path.join(args.outdir, "report.json")
    write_json(report_path, report)
    outputs.append(report_path)
    if refs is not None:
        print(json.dumps({"psnr_db": report["psnr_db"]}))
    return {"params": {"auto_detect": args.auto_detect, "n_frames": len(plan)}, "inputs": inputs, "outputs": outputs}


def _json_float(x):
    return x if np.isfinite(x) else "inf"


def cmd_star(args):
    chart = siemens_star(args.size, args.size, args.cycles)
    inputs = []
    if args.through_plan:
        plan = read_plan(args.through_plan)
        inputs.append(args.through_plan)
        entry = _plan_for_index(plan, args.index)
        mask = make_mask(entry.mask, args.size, args.size)
        coded = encode([chart.image], [mask], normalization="sum")
        chart = StarChart(extract_sideband(coded, entry), chart.cycles, chart.center)
    report = measure_limiting_radius(chart, args.threshold)
    outputs = []
    if args.out:
        write_json(args.out, report.to_dict())
        outputs.append(args.out)
    else:
        print(report.to_json())
    if args.csv:
        from .imageio import _atomic_write

        _atomic_write(args.csv, report.to_csv().encode("ascii"))
        outputs.append(args.csv)
    return {"params": {"limiting_radius": report.limiting_radius}, "inputs": inputs, "outputs": outputs}


def cmd_flow(args):
    a, b = read_image(args.img_a), read_image(args.img_b)
    if args.frames < 2:
        raise ValidationError(f"need at least 2 frames, got {args.frames}")
    flow = estimate_flow(a, b, alpha=args.alpha)
    frames = interpolate_frames(a, b, flow, args.frames)
    os.makedirs(args.outdir, exist_ok=True)
    outputs = []
    for i, f in enumerate(frames):
        path = _frame_name(args.outdir, "frame", i, args.format)
        write_image(path, f, args.format)
        outputs.append(path)
    flo = os.path.join(args.outdir, "flow.flo")
    write_flow(flo, flow)
    outputs.append(flo)
    report = {
        "median_dx": float(np.median(flow.dx)),
        "median_dy": float(np.median(flow.dy)),
        "low_texture": flow.low_texture,
        "frames": outputs[:-1],
    }
    report_path = os.path.join(args.outdir, "report.json")
    write_json(report_path, report)
    outputs.append(report_path)
    return {"params": {"low_texture": flow.low_texture}, "inputs": [args.img_a, args.img_b], "outputs": outputs}


COMMANDS = {
    "plan": cmd_plan,
    "mask": cmd_mask,
    "simulate": cmd_simulate,
    "decode": cmd_decode,
    "star": cmd_star,
    "flow": cmd_flow,
}


def _manifest_path(args, outputs):
    if args.manifest:
        return args.manifest
    outdir = getattr(args, "outdir", None)
    if outdir:
        return os.path.join(outdir, "manifest.json")
    if outputs:
        return outputs[0] + ".manifest.json"
    return None


def _exit_code(exc):
    if isinstance(exc, UsageError):
        return EXIT_USAGE, "usage"
    if isinstance(exc, (ParseError, OSError)):
        return EXIT_IO, "io"
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION, "validation"
    if isinstance(exc, (PlanningError, UnresolvableError, FDMIError)):
        return EXIT_COMPUTATION, "computation"
    return EXIT_COMPUTATION, "computation"


def _fail(exc):
    code, kind = _exit_code(exc)
    message = str(exc).replace("\n", " ")
    if isinstance(exc, OSError) and exc.filename is not None:
        message = f"{exc.strerror or message}: {exc.filename}"
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": message}) + "\n")
    return code


def run(argv):
    """Execute one invocation; returns the exit code."""
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "replay":
            with open(args.manifest_path, encoding="utf-8") as fh:
                try:
                    recorded = json.load(fh)["argv"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ParseError(f"not an fdmi manifest: {exc}", 0) from None
            return run(recorded)
        start = time.perf_counter()
        result = COMMANDS[args.command](args)
        duration = time.perf_counter() - start
        path = _manifest_path(args, result["outputs"])
        if path is not None:
            params = {k: v for k, v in vars(args).items() if k not in ("manifest",)}
            params.update(result["params"])
            manifest = {
                "subcommand": args.command,
                "argv": argv,
                "params": params,
                "seed": getattr(args, "seed", 0),
                "inputs": result["inputs"],
                "outputs": result["outputs"],
                "version": __version__,
                "duration_s": duration,
            }
            write_json(path, manifest)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one error line
        return _fail(exc)
    return EXIT_OK


def main(argv=None):
    # argparse handles --help/--version itself and exits 0
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
