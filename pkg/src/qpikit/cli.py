"""Command-line front end for the full pipeline.

Subcommands: simulate, retrieve, unwrap, correct (bg | zernike), tomogram,
evaluate, render. Exit codes: 0 success, 1 runtime failure, 2 usage error.
All randomness flows from explicit seeds; reruns with identical arguments
produce byte-identical artifacts. The QPI_LOG environment variable sets the
log level (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import aberration as ab
from . import dataset as ds
from . import holography as holo
from . import metrics as mt
from . import odt
from . import phantom as ph
from .errors import QpiError
from .field import Manifest, read_field, read_planes, write_field
from .unwrap import unwrap_goldstein

log = logging.getLogger("qpikit.cli")


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = dc_field(default_factory=list)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpikit",
                                     description="synthetic QPI pipeline tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a paired dataset from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("retrieve", help="demodulate a hologram QPIF into a field QPIF")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--filter-radius", type=float, default=0.12)

    p = sub.add_parser("unwrap", help="Goldstein-unwrap a field's phase channel")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("correct", help="aberration correction")
    csub = p.add_subparsers(dest="method", required=True)
    pbg = csub.add_parser("bg", help="background subtraction (complex division)")
    pbg.add_argument("--sample", required=True)
    pbg.add_argument("--background", required=True)
    pbg.add_argument("--out", required=True)
    pz = csub.add_parser("zernike", help="least-squares Zernike baseline removal")
    pz.add_argument("--in", dest="input", required=True)
    pz.add_argument("--max-noll", type=int, required=True)
    pz.add_argument("--mask", default=None, help="QPIF whose amplitude > 0.5 marks fit pixels")
    pz.add_argument("--out", required=True)

    p = sub.add_parser("tomogram", help="reconstruct a volume from a manifest of fields")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reg-iters", type=int, default=odt.DEFAULT_REG_ITERS)
    p.add_argument("--field", choices=("gt", "input"), default="gt",
                   help="reconstruct from corrected (gt) or raw aberrated (input) fields")

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--gt", required=True, help="QPIF file or manifest")
    p.add_argument("--pred", required=True,
                   help="QPIF file, manifest (scores its input fields), or directory")
    p.add_argument("--report", required=True, help="output JSON path")
    p.add_argument("--hist", default=None, help="output CSV for the error histogram")
    p.add_argument("--percentile", type=float, default=0.85)

    p = sub.add_parser("render", help="render a QPIF or QPIF-V as PNG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> list[str]:
    config = ds.SimConfig.from_json(args.config)
    if args.seed is not None:
        config = ds.SimConfig.from_dict(
            {**json.loads(Path(args.config).read_text()), "seed": args.seed})
    manifest = ds.generate_dataset(config, args.out, jobs=max(1, args.jobs))
    out = Path(args.out)
    paths = [str(out / "manifest.jsonl")]
    for e in manifest.entries:
        paths.extend([str(out / e.input_path), str(out / e.gt_path)])
    return paths


def _cmd_retrieve(args) -> list[str]:
    hologram = holo.read_hologram(args.input)
    fld = holo.retrieve_takeda(hologram, args.filter_radius)
    from .field import FieldMeta

    write_field(fld, FieldMeta(role="raw"), args.out)
    return [args.out]


def _cmd_unwrap(args) -> list[str]:
    fld, meta = read_field(args.input)
    from .field import ComplexField

    out = ComplexField(fld.amplitude, unwrap_goldstein(fld.phase),
                       fld.pixel_size, fld.wavelength)
    write_field(out, meta, args.out)
    return [args.out]


def _cmd_correct(args) -> list[str]:
    if args.method == "bg":
        sample, meta = read_field(args.sample)
        background, _ = read_field(args.background)
        out = ab.correct_background(sample, background)
        write_field(out, meta, args.out)
    else:
        fld, meta = read_field(args.input)
        mask = None
        if args.mask:
            mask_field, _ = read_field(args.mask)
            mask = mask_field.amplitude > 0.5
        out, coeffs = ab.correct_zernike_fit(fld, args.max_noll, mask)
        meta.extra = {**meta.extra, "zernike_fit": [float(c) for c in coeffs]}
        write_field(out, meta, args.out)
    return [args.out]


def _cmd_tomogram(args) -> list[str]:
    manifest = Manifest.read(args.manifest)
    base = Path(args.manifest).parent
    entries = sorted(manifest.entries, key=lambda e: (e.angle_index, e.pair_id))
    fields, angles = [], []
    pixel_size = wavelength = n_medium = None
    for e in entries:
        path = base / (e.gt_path if args.field == "gt" else e.input_path)
        fld, meta = read_field(path)
        if args.field == "input":
            fld = type(fld)(fld.amplitude, unwrap_goldstein(fld.phase),
                            fld.pixel_size, fld.wavelength)
        fields.append(fld)
        angles.append((float(meta.extra.get("kx", 0.0)), float(meta.extra.get("ky", 0.0))))
        pixel_size, wavelength = fld.pixel_size, fld.wavelength
        n_medium = float(meta.extra.get("n_medium", 1.337))
    optics = ph.OpticsConfig(wavelength=wavelength, n_medium=n_medium,
                             pixel_size=pixel_size, grid=fields[0].width, angles=angles)
    volume = odt.reconstruct(fields, optics, regularization_iters=args.reg_iters,
                             check_residues=False)
    ph.write_volume(volume, args.out)
    return [args.out]


def _pred_lookup(pred_arg: str):
    """pair_id -> field loader for a prediction source (file, manifest, or directory)."""
    path = Path(pred_arg)
    if path.is_dir():
        table = {}
        for f in sorted(path.glob("*.qpif")):
            _, meta = read_field(f)
            table[meta.pair_id] = f
        return lambda pid: read_field(table[pid])[0]
    if path.suffix == ".jsonl":
        manifest = Manifest.read(path)
        table = {e.pair_id: path.parent / e.input_path for e in manifest.entries}
        return lambda pid: read_field(table[pid])[0]
    return None


def _cmd_evaluate(args) -> list[str]:
    gt_path = Path(args.gt)
    artifacts = []
    if gt_path.suffix == ".jsonl":
        manifest = Manifest.read(gt_path)
        lookup = _pred_lookup(args.pred)
        if lookup is None:
            raise QpiError("--pred must be a manifest or directory when --gt is a manifest")
        pair_reports = {}
        pooled = []
        for e in sorted(manifest.entries, key=lambda e: e.pair_id):
            gt_field, _ = read_field(gt_path.parent / e.gt_path)
            pred_field = lookup(e.pair_id)
            report = mt.error_report(gt_field, pred_field)
            pair_reports[e.pair_id] = report.to_dict()
            pooled.append((report.fce, report.rmse_phase,
                           gt_field.phase - pred_field.phase))
        fces = [p[0] for p in pooled]
        rmses = [p[1] for p in pooled]
        aggregate = {
            "count": len(pooled),
            "mean_fce": float(np.mean(fces)),
            "median_fce": float(np.median(fces)),
            "mean_rmse_phase": float(np.mean(rmses)),
            "median_rmse_phase": float(np.median(rmses)),
            "percentile": args.percentile,
            "fce_at_percentile": mt.percentile_summary(fces, args.percentile),
            "rmse_phase_at_percentile": mt.percentile_summary(rmses, args.percentile),
        }
        payload = {"aggregate": aggregate, "pairs": pair_reports}
        if args.hist:
            errors = np.concatenate([p[2].ravel() for p in pooled])
            centers, fractions = mt.fractional_histogram(errors)
            _write_hist_csv(args.hist, centers, fractions)
            artifacts.append(args.hist)
    else:
        gt_field, _ = read_field(gt_path)
        pred_field, _ = read_field(args.pred)
        report = mt.error_report(gt_field, pred_field)
        payload = report.to_dict()
        if args.hist:
            Path(args.hist).write_text(report.histogram_csv(), encoding="utf-8")
            artifacts.append(args.hist)
    Path(args.report).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                                 encoding="utf-8")
    return [args.report] + artifacts


def _write_hist_csv(path, centers, fractions) -> None:
    lines = ["bin_center,fraction"]
    lines += [f"{c!r},{f!r}" for c, f in zip(centers, fractions)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_render(args) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    planes, meta = read_planes(args.input)
    if meta.get("volume"):
        data = planes[planes.shape[0] // 2]
        vmin, vmax = float(data.min()), float(data.max())
        cmap, label = "viridis", "refractive index (central z slice)"
    else:
        data = planes[1] if planes.shape[0] >= 2 else planes[0]
        bound = max(np.pi, float(np.abs(data).max()))
        vmin, vmax = -bound, bound
        cmap, label = "twilight_shifted", "phase (rad)"
    plt.imsave(args.out, data, cmap=cmap, vmin=vmin, vmax=vmax)
    sidecar = args.out + ".txt"
    Path(sidecar).write_text(
        f"source: {args.input}\nquantity: {label}\nvmin: {vmin!r}\nvmax: {vmax!r}\n"
        f"colormap: {cmap}\n", encoding="utf-8")
    return [args.out, sidecar]


_COMMANDS = {
    "simulate": _cmd_simulate,
    "retrieve": _cmd_retrieve,
    "unwrap": _cmd_unwrap,
    "correct": _cmd_correct,
    "tomogram": _cmd_tomogram,
    "evaluate": _cmd_evaluate,
    "render": _cmd_render,
}


def run(argv: list[str]) -> CommandOutcome:
    """Dispatch a CLI invocation; returns the outcome instead of exiting."""
    level = os.environ.get("QPI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CommandOutcome(2 if exc.code not in (0, None) else 0)
    try:
        artifacts = _COMMANDS[args.command](args)
        return CommandOutcome(0, artifacts)
    except QpiError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return CommandOutcome(1)
    except FileNotFoundError as exc:
        print(f"IoError: {exc}", file=sys.stderr)
        return CommandOutcome(1)


def main() -> None:
    sys.exit(run(sys.argv[1:]).exit_code)


if __name__ == "__main__":
    main()
