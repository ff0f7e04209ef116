"""Sampling, label transfer, optimal alignment and agreement metrics.

Randomness comes from numpy's PCG64 bit generator seeded with the caller's
integer seed, so samples reproduce bit-for-bit across platforms.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import kernels
from .carrier import Carrier, build_carrier, edge_adjacency
from .hungarian import max_weight_matching
from .partition import DEFAULT_THETA, partition_solid
from .tessellate import T0, T1, TessellationSpec

LOGGER = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
DEFAULT_BAND = 0.01
TRANSFER_MODES = ("surface", "vertex")


class EvaluationError(ValueError):
    pass


@dataclass
class SampledLabels:
    points: np.ndarray  # (n, 3)
    labels: np.ndarray  # (n,) int64
    boundary: np.ndarray  # (n,) bool, True for points drawn in the boundary band
    source: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points.shape[0] != self.labels.shape[0] or self.labels.shape[0] != self.boundary.shape[0]:
            raise EvaluationError("points, labels and boundary mask differ in length")
        if self.labels.size and self.labels.min() < 0:
            raise EvaluationError("labels must be non-negative")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def with_labels(self, labels: np.ndarray, **source) -> "SampledLabels":
        return SampledLabels(self.points, np.asarray(labels, np.int64), self.boundary, {**self.source, **source})


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def label_boundary_edges(carrier: Carrier):
    """Welded mesh edges whose two triangles carry different part labels."""
    edges, ta, tb = edge_adjacency(carrier.triangles, len(carrier.vertices))
    inner = tb >= 0
    edges, ta, tb = edges[inner], ta[inner], tb[inner]
    diff = carrier.part_label[ta] != carrier.part_label[tb]
    return edges[diff], ta[diff], tb[diff]


def sample_points(carrier: Carrier, n: int = DEFAULT_SAMPLES, seed: int = 0, band: float = DEFAULT_BAND,
                  boundary_fraction: float = 0.1) -> SampledLabels:
    """Area-weighted surface samples plus a band of samples along part boundaries.

    The first ``n`` points are uniform over the surface. A further
    ``int(n * boundary_fraction)`` points are drawn per unit length on the
    label-boundary edges and pushed into an adjacent triangle by at most
    ``band * diag``; they are flagged in ``boundary``.
    """
    if len(carrier) == 0:
        raise EvaluationError("cannot sample an empty carrier")
    if n < 1:
        raise EvaluationError("n must be at least 1")
    rng = _rng(seed)
    areas = carrier.areas()
    cum = np.cumsum(areas)
    total = cum[-1]
    tri = np.searchsorted(cum, rng.random(n) * total, side="right")
    tri = np.minimum(tri, len(areas) - 1)
    r1 = rng.random(n)
    r2 = rng.random(n)
    pts = kernels.barycentric_points(carrier.vertices, carrier.triangles, tri, r1, r2)
    labels = carrier.part_label[tri]

    edges, ta, tb = label_boundary_edges(carrier)
    nb = int(n * boundary_fraction) if len(edges) else 0
    if nb:
        V = carrier.vertices
        p0, p1 = V[edges[:, 0]], V[edges[:, 1]]
        lengths = np.linalg.norm(p1 - p0, axis=1)
        ecum = np.cumsum(lengths)
        eidx = np.minimum(np.searchsorted(ecum, rng.random(nb) * ecum[-1], side="right"), len(edges) - 1)
        s = rng.random(nb)
        side = rng.random(nb) < 0.5
        depth = 1.0 - rng.random(nb)  # in (0, 1]: never exactly on the edge
        t_side = np.where(side, ta[eidx], tb[eidx])
        on_edge = p0[eidx] + s[:, None] * (p1[eidx] - p0[eidx])
        T = carrier.triangles[t_side]
        e0, e1 = edges[eidx, 0], edges[eidx, 1]
        opp = np.where((T[:, 0] != e0) & (T[:, 0] != e1), T[:, 0],
                       np.where((T[:, 1] != e0) & (T[:, 1] != e1), T[:, 1], T[:, 2]))
        apex = V[opp]
        d = p1[eidx] - p0[eidx]
        height = np.linalg.norm(np.cross(d, apex - p0[eidx]), axis=1) / np.maximum(lengths[eidx], 1e-300)
        reach = np.minimum(1.0, band * carrier.diag() / np.maximum(height, 1e-300))
        bpts = on_edge + (reach * depth)[:, None] * (apex - on_edge)
        pts = np.vstack([pts, bpts])
        labels = np.concatenate([labels, carrier.part_label[t_side]])
    mask = np.zeros(len(labels), bool)
    mask[n:] = True
    source = {"carrier": carrier.meta.get("model_id", ""), "tess": carrier.meta.get("tess", {}).get("name", ""),
              "seed": int(seed), "n": int(n), "band": float(band)}
    return SampledLabels(pts, labels.astype(np.int64), mask, source)


def vertex_labels(carrier: Carrier) -> Tuple[np.ndarray, np.ndarray]:
    """(vertex ids, labels): each referenced vertex takes the label of its lowest-index triangle."""
    t = carrier.triangles.reshape(-1)
    owner = np.repeat(np.arange(len(carrier)), 3)
    order = np.lexsort((owner, t))
    t, owner = t[order], owner[order]
    first = np.ones(len(t), bool)
    first[1:] = t[1:] != t[:-1]
    return t[first], carrier.part_label[owner[first]]


def transfer_labels(points: SampledLabels, target: Carrier, mode: str = "vertex") -> SampledLabels:
    """Give every point the label of the nearest target vertex (or triangle, ``mode='surface'``)."""
    if len(target) == 0:
        raise EvaluationError("cannot transfer from an empty target")
    if mode == "vertex":
        vids, vlab = vertex_labels(target)
        idx = kernels.nearest_vertex(points.points, target.vertices[vids])
        labels = vlab[idx]
    elif mode == "surface":
        idx = kernels.nearest_triangle(points.points, target.vertices, target.triangles)
        labels = target.part_label[idx]
    else:
        raise EvaluationError(f"unknown transfer mode {mode!r}")
    return points.with_labels(labels, transfer=mode, target_tess=target.meta.get("tess", {}).get("name", ""))


@dataclass
class Alignment:
    ref_labels: np.ndarray
    cand_labels: np.ndarray
    confusion: np.ndarray
    matched: List[Tuple[int, int]]  # label pairs
    unmatched_ref: List[int]
    unmatched_cand: List[int]

    def mapping(self) -> Dict[int, int]:
        """cand label -> ref label."""
        return {c: r for r, c in self.matched}


def _check_pair(ref: SampledLabels, cand: SampledLabels) -> None:
    if len(ref) != len(cand):
        raise EvaluationError(f"point counts differ ({len(ref)} vs {len(cand)})")
    if not np.array_equal(ref.points, cand.points) or not np.array_equal(ref.boundary, cand.boundary):
        raise EvaluationError("labelings are not defined on the same points")


def align_labels(ref: SampledLabels, cand: SampledLabels) -> Alignment:
    """Hungarian matching on the surface-sample confusion matrix."""
    _check_pair(ref, cand)
    surf = ~ref.boundary
    r, c = ref.labels[surf], cand.labels[surf]
    rl, ri = np.unique(r, return_inverse=True)
    cl, ci = np.unique(c, return_inverse=True)
    conf = kernels.confusion_matrix(ri, ci, len(rl), len(cl))
    pairs = max_weight_matching(conf)
    matched = [(int(rl[i]), int(cl[j])) for i, j in pairs]
    mr = {a for a, _ in matched}
    mc = {b for _, b in matched}
    return Alignment(rl, cl, conf, matched,
                     [int(x) for x in rl if int(x) not in mr], [int(x) for x in cl if int(x) not in mc])


@dataclass
class AgreementReport:
    accuracy: float
    miou: float
    boundary_accuracy: float
    matched: List[Tuple[int, int]]
    unmatched_ref: List[int]
    unmatched_cand: List[int]
    per_label_iou: Dict[int, float]
    n_points: int = 0
    n_boundary: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "miou": self.miou,
            "boundary_accuracy": self.boundary_accuracy,
            "matched": [[int(a), int(b)] for a, b in self.matched],
            "unmatched_ref": list(self.unmatched_ref),
            "unmatched_cand": list(self.unmatched_cand),
            "per_label_iou": {str(k): v for k, v in sorted(self.per_label_iou.items())},
            "n_points": self.n_points,
            "n_boundary": self.n_boundary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def agreement(ref: SampledLabels, cand: SampledLabels, alignment: Optional[Alignment] = None) -> AgreementReport:
    """Accuracy, mean IoU over reference labels (unmatched count as 0) and boundary accuracy.

    The boundary band itself is fixed when the reference points are sampled.
    """
    al = alignment or align_labels(ref, cand)
    conf = al.confusion
    ridx = {int(x): i for i, x in enumerate(al.ref_labels)}
    cidx = {int(x): j for j, x in enumerate(al.cand_labels)}
    n_surf = int(conf.sum())
    hit = sum(int(conf[ridx[r], cidx[c]]) for r, c in al.matched)
    accuracy = hit / n_surf if n_surf else 1.0
    row = conf.sum(axis=1)
    col = conf.sum(axis=0)
    per = {int(r): 0.0 for r in al.ref_labels}
    for r, c in al.matched:
        i, j = ridx[r], cidx[c]
        inter = int(conf[i, j])
        union = int(row[i] + col[j] - inter)
        per[r] = inter / union if union else 0.0
    miou = float(np.mean(list(per.values()))) if per else 1.0
    mask = ref.boundary
    nb = int(mask.sum())
    if nb:
        mapping = al.mapping()
        mapped = np.array([mapping.get(int(x), -1) for x in cand.labels[mask]], np.int64)
        boundary_accuracy = float(np.count_nonzero(mapped == ref.labels[mask])) / nb
    else:
        boundary_accuracy = accuracy
    return AgreementReport(float(accuracy), miou, float(boundary_accuracy), al.matched,
                           al.unmatched_ref, al.unmatched_cand, per, n_surf, nb)


def self_consistency(solid, spec_ref: TessellationSpec = T0, spec_alt: TessellationSpec = T1,
                     theta: float = DEFAULT_THETA, tau_min: int = 20, n: int = DEFAULT_SAMPLES,
                     seed: int = 0, band: float = DEFAULT_BAND, transfer: str = "surface") -> AgreementReport:
    """Agreement between carriers of one partition at two tessellations (sample ref, transfer alt)."""
    partition = partition_solid(solid, theta)
    ref_c = build_carrier(solid, partition, spec_ref, tau_min)
    alt_c = build_carrier(solid, partition, spec_alt, tau_min)
    pts = sample_points(ref_c, n, seed, band)
    cand = transfer_labels(pts, alt_c, transfer)
    return agreement(pts, cand)


def labels_from_sidecar(data: dict, carrier: Carrier) -> Carrier:
    """Carrier geometry with the per-triangle labels of an external sidecar."""
    labels = np.asarray(data["part_label"], np.int64)
    if labels.shape[0] != len(carrier):
        raise EvaluationError("label file does not match the carrier's triangle count")
    return Carrier(carrier.vertices, carrier.triangles, labels, carrier.source_face, carrier.primitive,
                   dict(data.get("meta", {})))


__all__ = [
    "AgreementReport",
    "Alignment",
    "DEFAULT_BAND",
    "DEFAULT_SAMPLES",
    "EvaluationError",
    "SampledLabels",
    "TRANSFER_MODES",
    "agreement",
    "align_labels",
    "label_boundary_edges",
    "labels_from_sidecar",
    "sample_points",
    "self_consistency",
    "transfer_labels",
    "vertex_labels",
]
