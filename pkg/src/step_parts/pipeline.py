"""Single-model pipeline and the corpus batch runner.

Every stage runs inside ``_stage`` so a failure carries the stage name into the
machine-readable error record. Batch outputs are written per model id; the only
file that depends on wall-clock time is ``summary.json``.
"""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import __version__
from .brep import build_brep
from .carrier import DEFAULT_TAU_MIN, Carrier, project_labels, stabilize, write_carrier
from .partition import DEFAULT_THETA, build_adjacency, extract_parts
from .step_parser import parse_step
from .tessellate import TessellationSpec, get_spec, tessellate_solid

LOGGER = logging.getLogger(__name__)

STAGES = ("parse", "build", "partition", "tessellate", "stabilize", "serialize")
STEP_SUFFIXES = (".step", ".stp")


def default_workers() -> int:
    raw = os.environ.get("STEP_PARTS_WORKERS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        LOGGER.warning("ignoring STEP_PARTS_WORKERS=%r", raw)
        return 1


@dataclass
class RunConfig:
    theta: float = DEFAULT_THETA
    tau_min: int = DEFAULT_TAU_MIN
    tess: str = "t0"
    chord_tol: Optional[float] = None
    angle_tol: Optional[float] = None
    samples: int = 100_000
    seed: int = 0
    band: float = 0.01
    transfer: str = "surface"
    workers: int = field(default_factory=default_workers)
    out_dir: str = "out"
    fail_fast: bool = False

    def spec(self) -> TessellationSpec:
        return get_spec(self.tess, self.chord_tol, self.angle_tol)

    def to_dict(self) -> dict:
        """Settings that influence results; worker count and paths are deliberately left out."""
        d = asdict(self)
        for k in ("workers", "out_dir", "fail_fast"):
            d.pop(k)
        d["tess_spec"] = self.spec().to_dict()
        d["version"] = __version__
        return d

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "RunConfig":
        known = {k: d[k] for k in ("theta", "tau_min", "tess", "chord_tol", "angle_tol",
                                   "samples", "seed", "band", "transfer") if k in d}
        known.update(overrides)
        return cls(**known)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, error: BaseException, model_id: str = ""):
        super().__init__(f"{stage}: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error
        self.model_id = model_id

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "stage": self.stage,
                "error": type(self.error).__name__, "message": str(self.error)}


@contextmanager
def _stage(name: str, timings: Dict[str, float], model_id: str) -> Iterator[None]:
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - recorded with its stage
        raise PipelineError(name, exc, model_id) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def model_id_of(path) -> str:
    return Path(path).stem


def extract_model(data, config: RunConfig, model_id: str = "") -> Tuple[Carrier, Dict[str, float]]:
    """STEP text or bytes to a stabilised, label-grouped carrier."""
    timings: Dict[str, float] = {}
    with _stage("parse", timings, model_id):
        graph = parse_step(data)
    with _stage("build", timings, model_id):
        solid = build_brep(graph)
    with _stage("partition", timings, model_id):
        adj = build_adjacency(solid)
        partition = extract_parts(adj, config.theta)
    with _stage("tessellate", timings, model_id):
        spec = config.spec()
        sm = tessellate_solid(solid, spec)
        if not sm.meshes:
            raise ValueError("no face could be tessellated")
    with _stage("stabilize", timings, model_id):
        meta = {
            "model_id": model_id,
            "config": config.to_dict(),
            "tess": spec.to_dict(),
            "skipped_faces": [s.to_dict() for s in sm.skipped],
            "diagnostics": [str(d) for d in solid.diagnostics],
            "adjacency_flags": list(adj.flags),
            "num_faces": len(solid.faces),
        }
        prims = [f.primitive.value for f in solid.faces]
        carrier = project_labels(sm.meshes, partition, prims, meta)
        carrier = stabilize(carrier, config.tau_min).grouped()
    return carrier, timings


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_error(out_dir: Path, err: PipelineError) -> Path:
    path = out_dir / f"{err.model_id}.error.json"
    path.write_text(_json_dump(err.to_dict()), encoding="utf-8")
    return path


def process_file(path: str, config: RunConfig, out_dir: str) -> dict:
    """Run one model end to end; never raises for model-level failures."""
    model_id = model_id_of(path)
    out = Path(out_dir)
    t0 = time.perf_counter()
    timings: Dict[str, float] = {}
    try:
        with _stage("parse", timings, model_id):
            data = Path(path).read_bytes()
        carrier, stage_t = extract_model(data, config, model_id)
        for k, v in stage_t.items():
            timings[k] = timings.get(k, 0.0) + v
        with _stage("serialize", timings, model_id):
            write_carrier(carrier, out / f"{model_id}.obj")
        result = {
            "model_id": model_id,
            "status": "ok",
            "parts": carrier.num_parts,
            "triangles": len(carrier),
            "skipped_faces": len(carrier.meta.get("skipped_faces", [])),
        }
    except PipelineError as err:
        write_error(out, err)
        result = {"model_id": model_id, "status": "failed", **err.to_dict()}
        LOGGER.warning("model %s failed at %s: %s", model_id, err.stage, err.error)
    return {"result": result, "timings": timings, "wall": time.perf_counter() - t0}


def find_step_files(root) -> List[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    files = [p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in STEP_SUFFIXES]
    return sorted(files, key=lambda p: (p.stem, str(p)))


def _percentiles(values: List[float]) -> Dict[str, float]:
    if not values:
        return {}
    arr = np.asarray(values)
    return {"mean": float(arr.mean()), "p50": float(np.percentile(arr, 50)),
            "p90": float(np.percentile(arr, 90)), "p99": float(np.percentile(arr, 99)),
            "max": float(arr.max())}


def run_batch(root, config: RunConfig) -> dict:
    """Process every STEP file under ``root``.

    Writes carriers, error records and ``manifest.json`` (all deterministic) plus
    ``summary.json`` with timings. Returns the summary.
    """
    files = find_step_files(root)
    ids = [model_id_of(p) for p in files]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ValueError(f"duplicate model ids: {', '.join(dupes)}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    records: Dict[str, dict] = {}
    workers = max(1, int(config.workers))
    LOGGER.info("batch: %d models, %d workers", len(files), workers)
    if workers == 1:
        for p in files:
            rec = process_file(str(p), config, str(out))
            records[rec["result"]["model_id"]] = rec
            if config.fail_fast and rec["result"]["status"] != "ok":
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(process_file, str(p), config, str(out)) for p in files]
            for fut in futures:
                rec = fut.result()
                records[rec["result"]["model_id"]] = rec
                if config.fail_fast and rec["result"]["status"] != "ok":
                    for f in futures:
                        f.cancel()
                    break
    ordered = [records[k] for k in sorted(records)]
    results = [r["result"] for r in ordered]
    failed = [r for r in results if r["status"] != "ok"]
    manifest = {"config": config.to_dict(), "models": results,
                "succeeded": len(results) - len(failed), "failed": len(failed)}
    (out / "manifest.json").write_text(_json_dump(manifest), encoding="utf-8")
    stage_times = {s: _percentiles([r["timings"][s] for r in ordered if s in r["timings"]]) for s in STAGES}
    summary = {
        "config": config.to_dict(),
        "workers": workers,
        "total": len(files),
        "processed": len(results),
        "succeeded": len(results) - len(failed),
        "failed": len(failed),
        "failures": failed,
        "wall_seconds": time.perf_counter() - t0,
        "per_model_seconds": _percentiles([r["wall"] for r in ordered]),
        "stage_seconds": {k: v for k, v in stage_times.items() if v},
    }
    (out / "summary.json").write_text(_json_dump(summary), encoding="utf-8")
    return summary


__all__ = [
    "PipelineError",
    "RunConfig",
    "STAGES",
    "default_workers",
    "extract_model",
    "find_step_files",
    "model_id_of",
    "process_file",
    "run_batch",
    "write_error",
]
