"""Command-line front end: ``step-parts <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .carrier import write_carrier
from .pipeline import (PipelineError, RunConfig, default_workers, extract_model, find_step_files,
                       model_id_of, run_batch, write_error)
from .tessellate import SPECS

LOGGER = logging.getLogger("step_parts")

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=8.0, help="dihedral merge threshold in degrees")
    p.add_argument("--tau-min", type=int, default=20, help="minimum triangles per label component")
    p.add_argument("--tess", choices=sorted(SPECS), default="t0", help="tessellation preset")
    p.add_argument("--chord-tol", type=float, default=None, help="override chord tolerance (fraction of diag)")
    p.add_argument("--angle-tol", type=float, default=None, help="override normal angle tolerance (degrees)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--band", type=float, default=0.01, help="boundary band as a fraction of diag")
    p.add_argument("--transfer", choices=("surface", "vertex"), default="surface")
    p.add_argument("--workers", type=int, default=None, help="default: $STEP_PARTS_WORKERS or 1")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--fail-fast", action="store_true")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _config(args) -> RunConfig:
    return RunConfig(
        theta=args.theta, tau_min=args.tau_min, tess=args.tess, chord_tol=args.chord_tol,
        angle_tol=args.angle_tol, samples=args.samples, seed=args.seed, band=args.band,
        transfer=args.transfer, workers=args.workers if args.workers else default_workers(),
        out_dir=args.out_dir, fail_fast=args.fail_fast,
    )


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fatal(stage: str, exc: BaseException, model_id: str = "") -> int:
    _emit({"model_id": model_id, "stage": stage, "error": type(exc).__name__, "message": str(exc)})
    return EXIT_FATAL


def cmd_extract(args) -> int:
    cfg = _config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mid = model_id_of(args.step)
    try:
        data = Path(args.step).read_bytes()
    except OSError as exc:
        return _fatal("read", exc, mid)
    try:
        carrier, timings = extract_model(data, cfg, mid)
    except PipelineError as err:
        write_error(out, err)
        _emit(err.to_dict())
        return EXIT_FATAL
    obj, labels = write_carrier(carrier, out / f"{mid}.obj")
    _emit({"model_id": mid, "obj": str(obj), "labels": str(labels), "parts": carrier.num_parts,
           "triangles": len(carrier), "skipped_faces": carrier.meta.get("skipped_faces", []),
           "isolated_parts": carrier.meta.get("isolated_parts", [])})
    LOGGER.info("timings %s", {k: round(v, 4) for k, v in timings.items()})
    return EXIT_OK


def cmd_eval(args) -> int:
    from .carrier import read_carrier, read_labels
    from .evaluate import agreement, labels_from_sidecar, sample_points, transfer_labels

    cfg = _config(args)
    try:
        ref = read_carrier(args.ref)
        if args.labels_only:
            cand = labels_from_sidecar(read_labels(args.cand), ref)
        else:
            cand = read_carrier(args.cand)
    except (OSError, ValueError) as exc:
        return _fatal("read", exc)
    try:
        pts = sample_points(ref, cfg.samples, cfg.seed, cfg.band)
        other = transfer_labels(pts, cand, cfg.transfer)
        report = agreement(pts, other)
    except ValueError as exc:
        return _fatal("eval", exc)
    out = report.to_dict()
    out["config"] = cfg.to_dict()
    _emit(out)
    return EXIT_OK


def _solids(inputs: Sequence[str], fail_fast: bool):
    from .brep import build_brep
    from .step_parser import parse_step

    failures = []
    for root in inputs:
        for path in find_step_files(root):
            try:
                yield model_id_of(path), build_brep(parse_step(path.read_bytes()))
            except Exception as exc:  # noqa: BLE001 - per-model isolation
                if fail_fast:
                    raise
                LOGGER.warning("skipping %s: %s", path, exc)
                failures.append(str(path))
    _solids.failures = failures


def cmd_hist(args) -> int:
    from .analysis import dihedral_histogram
    from .partition import build_adjacency

    cfg = _config(args)
    try:
        graphs = [build_adjacency(s) for _, s in _solids(args.inputs, cfg.fail_fast)]
    except Exception as exc:  # noqa: BLE001
        return _fatal("build", exc)
    hist = dihedral_histogram(graphs, args.bins)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "hist.csv").write_text(hist.to_csv(), encoding="utf-8")
    low = args.low_threshold if args.low_threshold is not None else cfg.theta
    _emit({"models": hist.num_models, "edges": hist.total, "low_threshold": low,
           "low_fraction": hist.fraction_below(low), "models_without_same_primitive": hist.models_without_same,
           "hist": str(out / "hist.csv")})
    return EXIT_PARTIAL if _solids.failures else EXIT_OK


def cmd_sweep(args) -> int:
    from .analysis import sweep_csv, threshold_sweep

    cfg = _config(args)
    thetas = sorted(float(t) for t in args.thetas.split(","))
    records = []
    try:
        for mid, solid in _solids(args.inputs, cfg.fail_fast):
            records.extend(threshold_sweep(solid, thetas, cfg.spec(), cfg.tau_min, mid))
    except Exception as exc:  # noqa: BLE001
        return _fatal("sweep", exc)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(records), encoding="utf-8")
    _emit({"records": len(records), "sweep": str(out / "sweep.csv")})
    return EXIT_PARTIAL if _solids.failures else EXIT_OK


def cmd_batch(args) -> int:
    cfg = _config(args)
    if not Path(args.dir).exists():
        return _fatal("read", FileNotFoundError(args.dir))
    try:
        summary = run_batch(args.dir, cfg)
    except OSError as exc:
        return _fatal("io", exc)
    _emit({k: summary[k] for k in ("total", "processed", "succeeded", "failed", "wall_seconds")})
    if summary["failed"] or summary["processed"] < summary["total"]:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_selfcons(args) -> int:
    from .brep import build_brep
    from .evaluate import self_consistency
    from .step_parser import parse_step
    from .tessellate import get_spec

    cfg = _config(args)
    try:
        solid = build_brep(parse_step(Path(args.step).read_bytes()))
    except Exception as exc:  # noqa: BLE001
        return _fatal("build", exc, model_id_of(args.step))
    report = self_consistency(solid, cfg.spec(), get_spec(args.alt), cfg.theta, cfg.tau_min,
                              cfg.samples, cfg.seed, cfg.band, cfg.transfer)
    out = report.to_dict()
    out["config"] = cfg.to_dict()
    out["alt"] = args.alt
    _emit(out)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import FIXTURES, synthetic_corpus

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.fixtures:
        models = [(name, make()) for name, make in FIXTURES.items()]
    else:
        models = synthetic_corpus(args.count, args.seed)
    for mid, text in models:
        (out / f"{mid}.step").write_text(text, encoding="utf-8")
    _emit({"written": len(models), "out_dir": str(out)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="step-parts", description="Face-level part labels from STEP B-Reps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="STEP file to labelled carrier (.obj + .labels.json)")
    p.add_argument("step")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="agreement between two labelled carriers")
    p.add_argument("ref", help="reference carrier (.obj or .labels.json)")
    p.add_argument("cand", help="candidate carrier, or a sidecar with --labels-only")
    p.add_argument("--labels-only", action="store_true", help="cand labels apply to the ref geometry")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("hist", help="same-primitive dihedral histogram (hist.csv)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--bins", type=int, default=90)
    p.add_argument("--low-threshold", type=float, default=None, help="default: --theta")
    _add_common(p)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("sweep", help="partition statistics over a theta list (sweep.csv)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--thetas", default="4,6,8,10,12")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("batch", help="extract every STEP file in a directory")
    p.add_argument("dir")
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("selfcons", help="label agreement of one model across two tessellations")
    p.add_argument("step")
    p.add_argument("--alt", choices=sorted(SPECS), default="t1")
    _add_common(p)
    p.set_defaults(func=cmd_selfcons)

    p = sub.add_parser("synth", help="write the synthetic corpus or the fixture set")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixtures", action="store_true")
    p.set_defaults(func=cmd_synth, verbose=0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
