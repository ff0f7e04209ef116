"""Labelled triangle carrier: projection, tau_min stabilisation and OBJ/JSON persistence."""
from __future__ import annotations

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .partition import Partition
from .tessellate import FaceMesh, TessellationSpec, tessellate_solid, triangle_areas

LOGGER = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_TAU_MIN = 20


class CarrierError(ValueError):
    pass


class UnknownFaceError(CarrierError):
    pass


class SchemaError(CarrierError):
    pass


@dataclass
class Carrier:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64
    part_label: np.ndarray  # (T,) int64, 1..k
    source_face: np.ndarray  # (T,) int64
    primitive: np.ndarray  # (T,) str
    meta: Dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def num_parts(self) -> int:
        return int(np.unique(self.part_label).size)

    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    def normals(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        ln = np.linalg.norm(n, axis=1)
        return n / np.where(ln > 0, ln, 1.0)[:, None]

    def diag(self) -> float:
        if len(self.vertices) == 0:
            return 1.0
        d = float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))
        return d if d > 0 else 1.0

    def grouped(self) -> "Carrier":
        """Copy with triangles stably sorted by part label (the on-disk order)."""
        order = np.argsort(self.part_label, kind="stable")
        return Carrier(
            self.vertices.copy(), self.triangles[order], self.part_label[order],
            self.source_face[order], self.primitive[order], copy.deepcopy(self.meta),
        )

    def equals(self, other: "Carrier") -> bool:
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.part_label, other.part_label)
            and np.array_equal(self.source_face, other.source_face)
            and np.array_equal(self.primitive, other.primitive)
            and self.meta == other.meta
        )


def empty_carrier(meta: Optional[Dict] = None) -> Carrier:
    meta = dict(meta or {})
    meta.setdefault("extensions", {})
    return Carrier(np.zeros((0, 3)), np.zeros((0, 3), np.int64), np.zeros(0, np.int64),
                   np.zeros(0, np.int64), np.zeros(0, dtype="<U24"), meta)


def part_totals(carrier: Carrier) -> List[Dict]:
    out = []
    if len(carrier) == 0:
        return out
    areas = carrier.areas()
    for lab in np.unique(carrier.part_label).tolist():
        m = carrier.part_label == lab
        prims, counts = np.unique(carrier.primitive[m], return_counts=True)
        out.append({
            "id": int(lab),
            "triangles": int(m.sum()),
            "area": float(areas[m].sum()),
            "primitive": str(prims[np.argmax(counts)]),
        })
    return out


def _refresh_meta(carrier: Carrier) -> None:
    carrier.meta["num_parts"] = carrier.num_parts
    carrier.meta["parts"] = part_totals(carrier)


def project_labels(meshes: Sequence[FaceMesh], partition: Partition,
                   primitives: Optional[Sequence[str]] = None, meta: Optional[Dict] = None) -> Carrier:
    """Concatenate face meshes, weld coincident vertices and set ``y_j = l(f_j)``.

    ``primitives[f]`` names the surface type of face ``f``; by default it is taken
    from the part summary that owns the face.
    """
    meta = dict(meta or {})
    meta.setdefault("theta_deg", float(partition.theta))
    meta.setdefault("extensions", {})
    meta.setdefault("version", __version__)
    if not meshes:
        c = empty_carrier(meta)
        _refresh_meta(c)
        return c
    n_faces = partition.assignment.shape[0]
    if primitives is None:
        by_face = [""] * n_faces
        for p in partition.parts:
            for f in p.faces:
                by_face[f] = p.primitive.value
        primitives = by_face
    verts, tris, faces = [], [], []
    off = 0
    for m in meshes:
        if not 0 <= m.face_id < n_faces:
            raise UnknownFaceError(f"face {m.face_id} is not in the partition")
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        faces.append(np.full(len(m.triangles), m.face_id, np.int64))
        off += len(m.vertices)
    V = np.vstack(verts) + 0.0
    T = np.vstack(tris)
    F = np.concatenate(faces)
    uniq, inv = np.unique(V, axis=0, return_inverse=True)
    T = inv.reshape(-1)[T].astype(np.int64)
    labels = partition.assignment[F].astype(np.int64)
    prim = np.array([primitives[f] for f in F.tolist()], dtype="<U24")
    c = Carrier(uniq, T, labels, F, prim, meta).grouped()
    _refresh_meta(c)
    return c


# ---------------------------------------------------------------- mesh edges


def edge_adjacency(triangles: np.ndarray, n_vertices: Optional[int] = None):
    """Unique undirected mesh edges with their incident triangle pairs.

    Returns ``(edges (E, 2), tri_a (E,), tri_b (E,))``; ``tri_b`` is -1 on open
    boundary edges. Edges used by more than two triangles yield one row per
    consecutive pair.
    """
    t = np.asarray(triangles, np.int64)
    if len(t) == 0:
        z = np.zeros(0, np.int64)
        return np.zeros((0, 2), np.int64), z, z
    nv = int(n_vertices if n_vertices is not None else t.max() + 1)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    owner = np.tile(np.arange(len(t)), 3)
    key = e[:, 0] * nv + e[:, 1]
    order = np.lexsort((owner, key))
    key, owner, e = key[order], owner[order], e[order]
    same_next = np.zeros(len(key), bool)
    same_next[:-1] = key[1:] == key[:-1]
    first = np.ones(len(key), bool)
    first[1:] = key[1:] != key[:-1]
    pair_idx = np.nonzero(same_next)[0]
    lone = np.nonzero(first & ~same_next)[0]
    edges = np.concatenate([e[pair_idx], e[lone]])
    tri_a = np.concatenate([owner[pair_idx], owner[lone]])
    tri_b = np.concatenate([owner[pair_idx + 1], np.full(len(lone), -1, np.int64)])
    return edges, tri_a, tri_b


# ---------------------------------------------------------------- stabilisation


def _components(n: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    _, comp = connected_components(g, directed=False)
    return comp


def stabilize(carrier: Carrier, tau_min: int = DEFAULT_TAU_MIN) -> Carrier:
    """Absorb label components smaller than ``tau_min`` triangles into their best neighbour.

    Components are processed smallest first (ties by lowest triangle index); the
    target is the neighbouring part with the longest shared boundary (ties by
    smaller part id). Iterates to a fixpoint, then compacts labels to 1..k'.
    """
    if tau_min < 0:
        raise ValueError("tau_min must be non-negative")
    out = Carrier(carrier.vertices, carrier.triangles, carrier.part_label.copy(),
                  carrier.source_face, carrier.primitive, copy.deepcopy(carrier.meta))
    out.meta["tau_min"] = int(tau_min)
    n = len(out)
    if n == 0 or tau_min == 0:
        out.meta.setdefault("isolated_parts", [])
        _refresh_meta(out)
        return out

    labels = out.part_label
    edges, ta, tb = edge_adjacency(out.triangles, len(out.vertices))
    inner = tb >= 0
    ta, tb, edges = ta[inner], tb[inner], edges[inner]
    length = np.linalg.norm(out.vertices[edges[:, 0]] - out.vertices[edges[:, 1]], axis=1)
    same = labels[ta] == labels[tb]
    comp = _components(n, ta[same], tb[same])

    n_comp = int(comp.max()) + 1
    size = np.bincount(comp, minlength=n_comp).astype(np.int64)
    min_tri = np.full(n_comp, n, np.int64)
    np.minimum.at(min_tri, comp, np.arange(n))
    comp_label = np.zeros(n_comp, np.int64)
    comp_label[comp] = labels
    # boundary length between component pairs
    ca, cb = comp[ta[~same]], comp[tb[~same]]
    lens = length[~same]
    nbr: Dict[int, Dict[int, float]] = {c: {} for c in range(n_comp)}
    for x, y, ln in zip(ca.tolist(), cb.tolist(), lens.tolist()):
        nbr[x][y] = nbr[x].get(y, 0.0) + ln
        nbr[y][x] = nbr[y].get(x, 0.0) + ln

    parent = np.arange(n_comp)
    alive = set(range(n_comp))
    absorbed = 0
    while True:
        small = [c for c in alive if size[c] < tau_min and nbr[c]]
        if not small:
            break
        c = min(small, key=lambda k: (size[k], min_tri[k]))
        per_label: Dict[int, float] = {}
        for d, ln in nbr[c].items():
            per_label[int(comp_label[d])] = per_label.get(int(comp_label[d]), 0.0) + ln
        target = min(per_label, key=lambda lab: (-per_label[lab], lab))
        # the new component is c plus every adjacent component carrying the target label
        group = sorted(d for d in nbr[c] if comp_label[d] == target)
        root = group[0]
        members = [c] + group[1:]
        for m in members:
            parent[m] = root
            size[root] += size[m]
            min_tri[root] = min(min_tri[root], min_tri[m])
            for d, ln in nbr[m].items():
                if d == root or d in members:
                    continue
                nbr[root][d] = nbr[root].get(d, 0.0) + ln
                nbr[d][root] = nbr[d].get(root, 0.0) + ln
                del nbr[d][m]
            nbr[m] = {}
            alive.discard(m)
        for m in members:
            nbr[root].pop(m, None)
        comp_label[root] = target
        absorbed += 1

    # resolve final labels through the union forest
    def find(x: int) -> int:
        while parent[x] != x:
            x = parent[x]
        return x

    final = np.array([comp_label[find(c)] for c in range(n_comp)], np.int64)
    new_labels = final[comp]
    isolated_raw = sorted({int(comp_label[c]) for c in alive if size[c] < tau_min})

    kept = np.unique(new_labels)
    remap = {int(old): i + 1 for i, old in enumerate(kept.tolist())}
    out.part_label = np.array([remap[x] for x in new_labels.tolist()], np.int64)
    out.meta["isolated_parts"] = [remap[x] for x in isolated_raw]
    out.meta["absorbed_components"] = int(absorbed) + int(carrier.meta.get("absorbed_components", 0))
    _refresh_meta(out)
    if absorbed:
        LOGGER.debug("stabilize: absorbed %d components, %d parts remain", absorbed, len(kept))
    return out


def build_carrier(solid, partition: Partition, spec: TessellationSpec,
                  tau_min: int = DEFAULT_TAU_MIN, meta: Optional[Dict] = None) -> Carrier:
    """Tessellate, project the partition and stabilise; the common path for every consumer."""
    sm = tessellate_solid(solid, spec)
    meta = dict(meta or {})
    meta["tess"] = spec.to_dict()
    meta["skipped_faces"] = [s.to_dict() for s in sm.skipped]
    prims = [f.primitive.value for f in solid.faces]
    carrier = project_labels(sm.meshes, partition, prims, meta)
    return stabilize(carrier, tau_min).grouped()


# ---------------------------------------------------------------- persistence


def _paths(path) -> Tuple[Path, Path]:
    s = str(path)
    for suffix in (".labels.json", ".obj"):
        if s.endswith(suffix):
            s = s[: -len(suffix)]
            break
    return Path(s + ".obj"), Path(s + ".labels.json")


def _fmt(x: float) -> str:
    return repr(float(x) + 0.0)


def write_carrier(carrier: Carrier, path) -> Tuple[Path, Path]:
    """Write ``<stem>.obj`` and ``<stem>.labels.json``; triangles go out label-grouped."""
    obj_path, json_path = _paths(path)
    c = carrier.grouped()
    lines = [f"# step_parts {__version__}"]
    lines.extend(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in c.vertices.tolist())
    current = None
    for (i, j, k), lab in zip(c.triangles.tolist(), c.part_label.tolist()):
        if lab != current:
            lines.append(f"g part_{lab}")
            current = lab
        lines.append(f"f {i + 1} {j + 1} {k + 1}")
    meta = copy.deepcopy(c.meta)
    meta.setdefault("extensions", {})
    sidecar = {
        "schema": SCHEMA_VERSION,
        "meta": meta,
        "part_label": c.part_label.tolist(),
        "source_face": c.source_face.tolist(),
        "primitive": c.primitive.tolist(),
    }
    obj_path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(obj_path, "\n".join(lines) + "\n")
    _atomic_write(json_path, json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n")
    return obj_path, json_path


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_labels(path) -> Dict:
    """Load and validate a ``.labels.json`` sidecar."""
    _, json_path = _paths(path)
    try:
        data = json.loads(Path(json_path).read_text(encoding="ascii"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{json_path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(data, dict) or data.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"{json_path}: unsupported schema {data.get('schema') if isinstance(data, dict) else None!r}")
    for key in ("meta", "part_label", "source_face", "primitive"):
        if key not in data:
            raise SchemaError(f"{json_path}: missing '{key}'")
    n = len(data["part_label"])
    if len(data["source_face"]) != n or len(data["primitive"]) != n:
        raise SchemaError(f"{json_path}: per-triangle arrays differ in length")
    return data


def read_carrier(path) -> Carrier:
    obj_path, _ = _paths(path)
    data = read_labels(path)
    verts: List[Tuple[float, float, float]] = []
    tris: List[Tuple[int, int, int]] = []
    try:
        with open(obj_path, encoding="ascii") as fh:
            for line in fh:
                if line.startswith("v "):
                    _, x, y, z = line.split()
                    verts.append((float(x), float(y), float(z)))
                elif line.startswith("f "):
                    _, i, j, k = line.split()
                    tris.append((int(i) - 1, int(j) - 1, int(k) - 1))
    except ValueError as exc:
        raise SchemaError(f"{obj_path}: malformed OBJ line ({exc})") from exc
    if len(tris) != len(data["part_label"]):
        raise SchemaError(f"{obj_path}: {len(tris)} faces but {len(data['part_label'])} labels")
    V = np.array(verts, dtype=float).reshape(-1, 3)
    T = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if len(T) and (T.min() < 0 or T.max() >= len(V)):
        raise SchemaError(f"{obj_path}: face index out of range")
    return Carrier(
        V, T,
        np.array(data["part_label"], np.int64),
        np.array(data["source_face"], np.int64),
        np.array(data["primitive"], dtype="<U24"),
        data["meta"],
    )


__all__ = [
    "Carrier",
    "CarrierError",
    "DEFAULT_TAU_MIN",
    "SCHEMA_VERSION",
    "SchemaError",
    "build_carrier",
    "UnknownFaceError",
    "edge_adjacency",
    "empty_carrier",
    "part_totals",
    "project_labels",
    "read_carrier",
    "read_labels",
    "stabilize",
    "write_carrier",
]
