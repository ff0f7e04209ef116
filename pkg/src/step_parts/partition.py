"""Face adjacency graph, dihedral angles and flood-fill part extraction."""
from __future__ import annotations

import csv
import io
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .brep import BRepSolid, PrimitiveType, TopoEdge

LOGGER = logging.getLogger(__name__)

DEFAULT_THETA = 8.0
# phi <= theta is evaluated with this slack so exact tangency survives rounding at theta = 0
ANGLE_EPS = 1e-7
INVERSION_FAILED = 180.0


def _angle_deg(na: np.ndarray, nb: np.ndarray) -> np.ndarray:
    # atan2 form: identical to arccos(clamp(dot)) but accurate near 0 and 180
    cross = np.linalg.norm(np.cross(na, nb), axis=-1)
    dot = np.sum(na * nb, axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def _oriented_normals(solid: BRepSolid, face_id: int, pts: np.ndarray):
    face = solid.faces[face_id]
    surf = solid.surface_of(face)
    u, v, ok = surf.invert(pts, solid.tol_onsurface)
    _, n, _ = surf.evaluate(u, v)
    return n * face.orientation, ok


def _edge_normals(solid: BRepSolid, edge: TopoEdge, fractions: Sequence[float]):
    t = np.array([edge.t_start + f * (edge.t_end - edge.t_start) for f in fractions])
    pts = edge.curve.evaluate(t)
    fa, fb = edge.faces[:2]
    na, oka = _oriented_normals(solid, fa, pts)
    nb, okb = _oriented_normals(solid, fb, pts)
    return na, nb, oka & okb


def dihedral_angle(solid: BRepSolid, edge: TopoEdge) -> float:
    """Angle in degrees between the oriented face normals at the edge mid-parameter."""
    if len(edge.incidences) != 2:
        raise ValueError(f"edge {edge.id} has {len(edge.incidences)} incidences, expected 2")
    na, nb, ok = _edge_normals(solid, edge, (0.5,))
    if not ok[0]:
        return INVERSION_FAILED
    return float(_angle_deg(na, nb)[0])


@dataclass
class AdjacencyGraph:
    num_faces: int
    a: np.ndarray
    b: np.ndarray
    edge_id: np.ndarray
    phi: np.ndarray
    same: np.ndarray
    face_types: List[PrimitiveType] = field(default_factory=list)
    spread: Optional[np.ndarray] = None
    flags: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.a.shape[0])

    @classmethod
    def from_edges(cls, num_faces: int, edges, face_types=None) -> "AdjacencyGraph":
        """Build from ``(a, b, phi, same)`` tuples; handy for synthetic graphs."""
        edges = list(edges)
        arr = lambda i, dt: np.array([e[i] for e in edges], dtype=dt)  # noqa: E731
        return cls(
            num_faces,
            arr(0, np.int64),
            arr(1, np.int64),
            np.arange(len(edges), dtype=np.int64),
            arr(2, float),
            arr(3, bool),
            list(face_types or [PrimitiveType.OTHER] * num_faces),
        )


def build_adjacency(solid: BRepSolid, spread: bool = False) -> AdjacencyGraph:
    """One graph edge per two-incidence topological edge; self-adjacent seams are skipped."""
    a, b, ids, phis, same, spreads = [], [], [], [], [], []
    flags: List[str] = []
    for edge in solid.edges:
        if len(edge.incidences) != 2:
            continue
        fa, fb = edge.faces
        if fa == fb:
            continue
        fractions = (0.5, 0.25, 0.75) if spread else (0.5,)
        na, nb, ok = _edge_normals(solid, edge, fractions)
        angles = _angle_deg(na, nb)
        if not ok[0]:
            phi = INVERSION_FAILED
            flags.append(f"inversion_failed:edge={edge.id}")
        else:
            phi = float(angles[0])
        a.append(fa)
        b.append(fb)
        ids.append(edge.id)
        phis.append(phi)
        same.append(solid.faces[fa].primitive == solid.faces[fb].primitive)
        if spread:
            spreads.append(float(np.ptp(angles)) if ok.all() else math.nan)
    phi_arr = np.array(phis, dtype=float)
    if phi_arr.size and np.count_nonzero(phi_arr > 179.0) * 2 > phi_arr.size:
        flags.append("orientation_suspect")
        LOGGER.warning("adjacent normals anti-parallel on most edges; check same-sense flags")
    return AdjacencyGraph(
        len(solid.faces),
        np.array(a, dtype=np.int64),
        np.array(b, dtype=np.int64),
        np.array(ids, dtype=np.int64),
        phi_arr,
        np.array(same, dtype=bool),
        [f.primitive for f in solid.faces],
        np.array(spreads) if spread else None,
        flags,
    )


@dataclass
class PartSummary:
    part_id: int
    faces: List[int]
    primitive: PrimitiveType

    @property
    def face_count(self) -> int:
        return len(self.faces)


@dataclass
class Partition:
    assignment: np.ndarray  # face id -> part id in 1..k
    parts: List[PartSummary]
    theta: float

    @property
    def num_parts(self) -> int:
        return len(self.parts)

    def __getitem__(self, face_id: int) -> int:
        return int(self.assignment[face_id])


def mergeable(graph: AdjacencyGraph, theta: float) -> np.ndarray:
    return graph.same & (graph.phi <= theta + ANGLE_EPS)


def extract_parts(graph: AdjacencyGraph, theta: float = DEFAULT_THETA) -> Partition:
    """Connected components under ``same type and phi <= theta`` via breadth-first search."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    n = graph.num_faces
    keep = mergeable(graph, theta)
    nbrs: List[List[int]] = [[] for _ in range(n)]
    for x, y in zip(graph.a[keep].tolist(), graph.b[keep].tolist()):
        nbrs[x].append(y)
        nbrs[y].append(x)
    assignment = np.zeros(n, dtype=np.int64)
    parts: List[PartSummary] = []
    # scanning seeds in ascending face id orders parts by their smallest face
    for seed in range(n):
        if assignment[seed]:
            continue
        pid = len(parts) + 1
        assignment[seed] = pid
        members = [seed]
        queue = deque([seed])
        while queue:
            f = queue.popleft()
            for g in nbrs[f]:
                if not assignment[g]:
                    assignment[g] = pid
                    members.append(g)
                    queue.append(g)
        types = graph.face_types[seed] if graph.face_types else PrimitiveType.OTHER
        parts.append(PartSummary(pid, sorted(members), types))
    return Partition(assignment, parts, float(theta))


def partition_solid(solid: BRepSolid, theta: float = DEFAULT_THETA) -> Partition:
    return extract_parts(build_adjacency(solid), theta)


def adjacency_csv(graph: AdjacencyGraph) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge_id", "face_a", "face_b", "type_a", "type_b", "phi_deg"])
    for i in range(len(graph)):
        ta = graph.face_types[graph.a[i]] if graph.face_types else PrimitiveType.OTHER
        tb = graph.face_types[graph.b[i]] if graph.face_types else PrimitiveType.OTHER
        w.writerow([int(graph.edge_id[i]), int(graph.a[i]), int(graph.b[i]), ta.value, tb.value,
                    repr(float(graph.phi[i]))])
    return buf.getvalue()


def part_faces(partition: Partition) -> Dict[int, List[int]]:
    return {p.part_id: p.faces for p in partition.parts}


__all__ = [
    "ANGLE_EPS",
    "AdjacencyGraph",
    "DEFAULT_THETA",
    "Partition",
    "PartSummary",
    "adjacency_csv",
    "build_adjacency",
    "dihedral_angle",
    "extract_parts",
    "mergeable",
    "part_faces",
    "partition_solid",
]
