"""Dihedral histograms and threshold sweeps over partitions.

Metric definitions used by the sweep:

* ``P``: number of labels on the stabilised carrier.
* ``H``: part-size entropy, ``-sum a_i log2 a_i`` over area shares.
* ``S_boundary``: mean dihedral (degrees) between the two triangles of every
  welded carrier edge that separates two parts, weighted by edge length.
* ``D_intra``: mean over parts of the area-weighted mean angle between the
  triangle normals and the part's area-weighted mean normal.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .brep import PrimitiveType
from .carrier import DEFAULT_TAU_MIN, Carrier, edge_adjacency, project_labels, stabilize
from .partition import AdjacencyGraph, _angle_deg, build_adjacency, extract_parts
from .tessellate import T0, TessellationSpec, tessellate_solid

LOGGER = logging.getLogger(__name__)

DEFAULT_BINS = 90
DEFAULT_SWEEP = (4.0, 6.0, 8.0, 10.0, 12.0)
PRIMITIVE_NAMES = [p.value for p in PrimitiveType]


@dataclass
class DihedralHistogram:
    edges: np.ndarray  # (bins + 1,) degrees
    counts: np.ndarray  # (bins,) int64
    total: int
    models_without_same: int = 0
    num_models: int = 0
    _phi: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def fraction_below(self, threshold: float) -> float:
        """Share of same-primitive edges with ``phi <= threshold`` (exact, not binned)."""
        if self.total == 0:
            return 0.0
        return float(np.count_nonzero(self._phi <= threshold)) / self.total

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        return buf.getvalue()


def dihedral_histogram(graphs: Iterable[AdjacencyGraph], bins: int = DEFAULT_BINS) -> DihedralHistogram:
    """Histogram of phi over same-primitive adjacencies only.

    Values that sit on an interior bin edge up to float noise (90 - 1e-13) are
    snapped onto that edge so analytic angles land in a predictable bin.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    edges = np.linspace(0.0, 180.0, bins + 1)
    phis = []
    without = 0
    n = 0
    for g in graphs:
        n += 1
        sel = g.phi[g.same]
        if sel.size == 0:
            without += 1
        phis.append(sel)
    phi = np.concatenate(phis) if phis else np.zeros(0)
    width = 180.0 / bins
    snapped = np.clip(phi + 1e-9, 0.0, 180.0)
    idx = np.minimum((snapped / width).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.int64)
    return DihedralHistogram(edges, counts, int(phi.size), without, n, phi)


@dataclass
class SweepRecord:
    model_id: str
    theta: float
    P: int
    H: float
    S_boundary: float
    D_intra: float
    primitive_counts: Dict[str, int]

    def key(self) -> tuple:
        return (self.P, self.H, self.S_boundary, self.D_intra, tuple(sorted(self.primitive_counts.items())))

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "theta": self.theta, "P": self.P, "H": self.H,
                "S_boundary": self.S_boundary, "D_intra": self.D_intra,
                "primitive_counts": dict(sorted(self.primitive_counts.items()))}


def part_entropy(carrier: Carrier) -> float:
    if len(carrier) == 0:
        return 0.0
    areas = carrier.areas()
    _, inv = np.unique(carrier.part_label, return_inverse=True)
    share = np.bincount(inv, weights=areas)
    share = share[share > 0] / share.sum()
    if share.size <= 1:
        return 0.0
    return float(max(0.0, -np.sum(share * np.log2(share))))


def boundary_sharpness(carrier: Carrier) -> float:
    """Length-weighted mean dihedral over part-separating carrier edges; 0 when there are none."""
    edges, ta, tb = edge_adjacency(carrier.triangles, len(carrier.vertices))
    m = (tb >= 0)
    edges, ta, tb = edges[m], ta[m], tb[m]
    m = carrier.part_label[ta] != carrier.part_label[tb]
    if not m.any():
        return 0.0
    edges, ta, tb = edges[m], ta[m], tb[m]
    n = carrier.normals()
    ang = _angle_deg(n[ta], n[tb])
    V = carrier.vertices
    length = np.linalg.norm(V[edges[:, 1]] - V[edges[:, 0]], axis=1)
    return float(np.sum(ang * length) / np.sum(length))


def intra_deviation(carrier: Carrier) -> float:
    if len(carrier) == 0:
        return 0.0
    n = carrier.normals()
    a = carrier.areas()
    devs = []
    for lab in np.unique(carrier.part_label):
        m = carrier.part_label == lab
        w = a[m]
        mean = (n[m] * w[:, None]).sum(axis=0)
        ln = np.linalg.norm(mean)
        if ln == 0 or w.sum() == 0:
            devs.append(90.0)
            continue
        ang = _angle_deg(n[m], np.broadcast_to(mean / ln, n[m].shape))
        devs.append(float(np.sum(ang * w) / w.sum()))
    return float(np.mean(devs))


def primitive_counts(carrier: Carrier) -> Dict[str, int]:
    """Parts per dominant primitive type (dominance by triangle count)."""
    counts: Dict[str, int] = {}
    for lab in np.unique(carrier.part_label):
        prims, c = np.unique(carrier.primitive[carrier.part_label == lab], return_counts=True)
        name = str(prims[np.argmax(c)])
        counts[name] = counts.get(name, 0) + 1
    return counts


def sweep_record(carrier: Carrier, theta: float, model_id: str = "") -> SweepRecord:
    return SweepRecord(model_id, float(theta), carrier.num_parts, part_entropy(carrier),
                       boundary_sharpness(carrier), intra_deviation(carrier), primitive_counts(carrier))


def threshold_sweep(solid, thetas: Sequence[float] = DEFAULT_SWEEP, spec: TessellationSpec = T0,
                    tau_min: int = DEFAULT_TAU_MIN, model_id: str = "",
                    graph: Optional[AdjacencyGraph] = None) -> List[SweepRecord]:
    """Re-run extraction for each theta; the solid is tessellated once."""
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValueError("theta list is empty")
    if any(b < a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("theta list must be ascending")
    graph = graph if graph is not None else build_adjacency(solid)
    meshes = tessellate_solid(solid, spec).meshes
    prims = [f.primitive.value for f in solid.faces]
    out = []
    for theta in thetas:
        partition = extract_parts(graph, theta)
        carrier = stabilize(project_labels(meshes, partition, prims), tau_min)
        out.append(sweep_record(carrier, theta, model_id))
    return out


def sweep_csv(records: Iterable[SweepRecord]) -> str:
    records = sorted(records, key=lambda r: (r.model_id, r.theta))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model_id", "theta", "P", "H", "S_boundary", "D_intra"] + PRIMITIVE_NAMES)
    for r in records:
        w.writerow([r.model_id, repr(r.theta), r.P, repr(r.H), repr(r.S_boundary), repr(r.D_intra)]
                   + [r.primitive_counts.get(p, 0) for p in PRIMITIVE_NAMES])
    return buf.getvalue()


def max_entropy(p: int) -> float:
    return math.log2(p) if p > 0 else 0.0


__all__ = [
    "DEFAULT_BINS",
    "DEFAULT_SWEEP",
    "DihedralHistogram",
    "SweepRecord",
    "boundary_sharpness",
    "dihedral_histogram",
    "intra_deviation",
    "max_entropy",
    "part_entropy",
    "primitive_counts",
    "sweep_csv",
    "sweep_record",
    "threshold_sweep",
]
