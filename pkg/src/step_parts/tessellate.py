"""Per-face UV-domain tessellation of trimmed B-Rep faces.

Boundary vertices are the per-edge samples shared by both incident faces, so
neighbouring face meshes meet on bit-identical coordinates. Interior Steiner
points come from a curvature-driven grid in metric-scaled UV space.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import shapely
import triangle as _triangle
from shapely.geometry import Polygon

from .brep import BRepSolid, Face, GeometryError, TopoEdge
from .brep.geometry import Circle, Cone, Ellipse, Line, Sphere, SurfaceGeom

LOGGER = logging.getLogger(__name__)

_MAX_GRID_POINTS = 60000
_MAX_BISECT = 12


@dataclass(frozen=True)
class TessellationSpec:
    """Tolerances; ``chord_tol`` and ``max_edge`` are fractions of the bounding-box diagonal."""

    name: str
    chord_tol: float
    angle_tol: float
    max_edge: Optional[float] = None

    def __post_init__(self):
        if not self.chord_tol > 0:
            raise ValueError("chord_tol must be positive")
        if not 0 < self.angle_tol < 90:
            raise ValueError("angle_tol must lie in (0, 90) degrees")
        if self.max_edge is not None and not self.max_edge > 0:
            raise ValueError("max_edge must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TessellationSpec":
        return cls(str(d["name"]), float(d["chord_tol"]), float(d["angle_tol"]),
                   None if d.get("max_edge") is None else float(d["max_edge"]))


T0 = TessellationSpec("T0", 0.005, 20.0, 0.05)
T1 = TessellationSpec("T1", 0.002, 12.0, 0.035)
T2 = TessellationSpec("T2", 0.02, 35.0, 0.1)
COARSE = TessellationSpec("coarse", 0.02, 35.0, None)
SPECS = {"t0": T0, "t1": T1, "t2": T2, "coarse": COARSE}


def get_spec(name: str, chord_tol: Optional[float] = None, angle_tol: Optional[float] = None) -> TessellationSpec:
    base = SPECS[name.lower()]
    if chord_tol is None and angle_tol is None:
        return base
    return TessellationSpec(
        "custom",
        base.chord_tol if chord_tol is None else chord_tol,
        base.angle_tol if angle_tol is None else angle_tol,
        base.max_edge,
    )


class TessellationError(GeometryError):
    pass


class LoopInversionError(TessellationError):
    pass


class SelfIntersectionError(TessellationError):
    pass


@dataclass
class FaceMesh:
    face_id: int
    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def area(self) -> float:
        return float(triangle_areas(self.vertices, self.triangles).sum())


@dataclass
class SkipRecord:
    face_id: int
    reason: str

    def to_dict(self) -> dict:
        return {"face": self.face_id, "reason": self.reason}


@dataclass
class SolidMesh:
    meshes: List[FaceMesh]
    skipped: List[SkipRecord] = field(default_factory=list)


def triangle_areas(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    if len(tris) == 0:
        return np.zeros(0)
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


# ---------------------------------------------------------------- step sizes


def _chord_step(kappa: float, chord: float) -> float:
    """Longest chord whose sagitta on a circle of curvature ``kappa`` stays below ``chord``."""
    if kappa <= 0:
        return math.inf
    r = 1.0 / kappa
    if chord >= r:
        return 2.0 * r
    return 2.0 * math.sqrt(2.0 * r * chord - chord * chord)


def _metric_step(kappa: float, chord: float, angle: float, max_len: float) -> float:
    step = min(_chord_step(kappa, chord), max_len)
    if kappa > 0:
        step = min(step, angle / kappa)
    return step


# ---------------------------------------------------------------- edges


class _Context:
    def __init__(self, solid: BRepSolid, spec: TessellationSpec):
        self.solid = solid
        self.spec = spec
        self.diag = solid.diag
        self.chord = spec.chord_tol * self.diag
        self.angle = math.radians(spec.angle_tol)
        self.max_len = spec.max_edge * self.diag if spec.max_edge else math.inf
        self.floor = 1e-3 * self.diag
        self._edges: Dict[int, np.ndarray] = {}

    def edge_points(self, edge: TopoEdge) -> np.ndarray:
        pts = self._edges.get(edge.id)
        if pts is None:
            pts = self._sample_edge(edge)
            self._edges[edge.id] = pts
        return pts

    def _sample_edge(self, edge: TopoEdge) -> np.ndarray:
        curve = edge.curve
        t0, t1 = edge.t_start, edge.t_end
        if isinstance(curve, (Line, Circle, Ellipse)):
            dense = curve.evaluate(np.linspace(t0, t1, 9))
        else:
            dense = curve.evaluate(np.linspace(t0, t1, 65))
        length = float(np.linalg.norm(np.diff(dense, axis=0), axis=1).sum())
        kappa = 0.0 if isinstance(curve, Line) else float(curve.curvature_bound())
        step = max(_metric_step(kappa, self.chord, self.angle, self.max_len), self.floor)
        n = max(1, int(math.ceil(length / step - 1e-9))) if math.isfinite(step) else 1
        if not isinstance(curve, Line) and n < 2 and edge.start_vertex == edge.end_vertex:
            n = 3
        ts = list(np.linspace(t0, t1, n + 1))
        if not isinstance(curve, (Line, Circle)):
            ts = self._bisect(curve, ts)
        pts = curve.evaluate(np.asarray(ts))
        pts[0] = edge.start
        pts[-1] = edge.end
        return pts

    def _bisect(self, curve, ts: List[float]) -> List[float]:
        out = [ts[0]]
        stack = [(a, b, 0) for a, b in zip(ts[:-1], ts[1:])][::-1]
        cos_tol = math.cos(self.angle)
        while stack:
            a, b, depth = stack.pop()
            m = 0.5 * (a + b)
            P = curve.evaluate(np.array([a, m, b]))
            D = curve.derivative(np.array([a, b]))
            chord = P[2] - P[0]
            cl = float(np.linalg.norm(chord))
            sag = float(np.linalg.norm(np.cross(P[1] - P[0], chord))) / cl if cl > 0 else float(np.linalg.norm(P[1] - P[0]))
            na, nb = np.linalg.norm(D[0]), np.linalg.norm(D[1])
            turn_ok = na == 0 or nb == 0 or float(D[0] @ D[1]) / (na * nb) >= cos_tol
            if depth < _MAX_BISECT and (sag > self.chord or not turn_ok or cl > self.max_len):
                stack.append((m, b, depth + 1))
                stack.append((a, m, depth + 1))
            else:
                out.append(b)
        return out


# ---------------------------------------------------------------- UV loops


def _poles(surf: SurfaceGeom) -> List[float]:
    if isinstance(surf, Sphere):
        return [-0.5 * math.pi, 0.5 * math.pi]
    if isinstance(surf, Cone):
        return [surf.apex_v]
    if surf.period_u and not surf.period_v and not surf.closed_form:
        u0, u1, v0, v1 = surf.domain
        us = np.linspace(u0, u1, 8)
        poles = []
        for v in (v0, v1):
            P = surf.derivs(us, np.full_like(us, v))[0]
            if float(np.ptp(P, axis=0).max()) <= 1e-9 * max(1.0, float(np.abs(P).max())):
                poles.append(v)
        return poles
    return []


def _unwrap(vals: np.ndarray, period: Optional[float]) -> Tuple[np.ndarray, int]:
    """Continuous branch along a closed loop and its winding number."""
    if not period or vals.size == 0:
        return vals, 0
    d = np.diff(vals)
    d = d - period * np.round(d / period)
    out = np.concatenate([[vals[0]], vals[0] + np.cumsum(d)])
    closing = vals[0] - out[-1]
    total = out[-1] - out[0] + (closing - period * np.round(closing / period))
    return out, int(round(total / period))


@dataclass
class _UVLoop:
    uv: np.ndarray  # (n, 2), open polyline (first point not repeated)
    xyz: np.ndarray  # (n, 3) boundary coordinates, shared with neighbouring faces
    wind_u: int = 0
    wind_v: int = 0


def _loop_points(ctx: _Context, face: Face) -> List[np.ndarray]:
    loops = []
    for loop in face.loops:
        chunks = []
        for e, forward in loop.edges:
            pts = ctx.edge_points(ctx.solid.edges[e])
            chunks.append((pts if forward else pts[::-1])[:-1])
        pts = np.concatenate(chunks) if chunks else np.zeros((0, 3))
        if len(pts):
            keep = np.ones(len(pts), bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            pts = pts[keep]
            if len(pts) > 1 and np.all(pts[0] == pts[-1]):
                pts = pts[:-1]
        if len(pts) >= 2:
            loops.append(pts)
    return loops


def _to_uv(ctx: _Context, surf: SurfaceGeom, pts: np.ndarray) -> _UVLoop:
    u, v, ok = surf.invert(pts, ctx.solid.tol_onsurface)
    if not np.all(ok):
        raise LoopInversionError(f"{int(np.count_nonzero(~ok))} loop points failed to invert")
    P, _, singular = surf.evaluate(u, v)
    gap = float(np.max(np.linalg.norm(P - pts, axis=1)))
    if gap > max(ctx.chord, 10 * ctx.solid.tol_onsurface):
        raise LoopInversionError(f"loop off surface by {gap:.3g}")
    regular = ~singular
    if not regular.any():
        raise LoopInversionError("loop collapses to a singular point")
    ur, wind_u = _unwrap(u[regular], surf.period_u)
    vr, wind_v = _unwrap(v[regular], surf.period_v)
    if singular.any():
        # a pole vertex splits into the u values of its two regular neighbours
        idx = np.nonzero(regular)[0]
        uv, xyz = [], []
        n = len(u)
        pos = {int(i): k for k, i in enumerate(idx)}
        for i in range(n):
            if regular[i]:
                uv.append((ur[pos[i]], vr[pos[i]]))
                xyz.append(pts[i])
                continue
            prev_i = next((i - k) % n for k in range(1, n) if regular[(i - k) % n])
            next_i = next((i + k) % n for k in range(1, n) if regular[(i + k) % n])
            up = ur[pos[prev_i]]
            un = ur[pos[next_i]]
            if next_i < i:  # wrapped around the loop start
                un = un + wind_u * (surf.period_u or 0.0)
            if prev_i > i:
                up = up - wind_u * (surf.period_u or 0.0)
            uv.append((up, v[i]))
            xyz.append(pts[i])
            if abs(un - up) > 1e-12:
                uv.append((un, v[i]))
                xyz.append(pts[i])
        return _UVLoop(np.array(uv), np.array(xyz), wind_u, wind_v)
    return _UVLoop(np.column_stack([ur, vr]), pts, wind_u, wind_v)


def _signed_area(uv: np.ndarray) -> float:
    x, y = uv[:, 0], uv[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _rotate_to_min(loop: _UVLoop, axis: int, period: float) -> _UVLoop:
    k = int(np.argmin(np.mod(loop.uv[:, axis], period)))
    uv = np.roll(loop.uv, -k, axis=0)
    xyz = np.roll(loop.xyz, -k, axis=0)
    uv[:, axis] += np.mod(uv[0, axis], period) - uv[0, axis]
    d = np.diff(uv[:, axis])
    d = d - period * np.round(d / period)
    uv[1:, axis] = uv[0, axis] + np.cumsum(d)
    return _UVLoop(uv, xyz, loop.wind_u, loop.wind_v)


# ---------------------------------------------------------------- face


class _Domain:
    """Polygon with holes in UV plus extra boundary points (cut lines, pole lines)."""

    def __init__(self):
        self.rings: List[np.ndarray] = []  # closed UV rings (open arrays)
        self.ring_xyz: List[List[Optional[np.ndarray]]] = []

    def add(self, uv: np.ndarray, xyz: List[Optional[np.ndarray]]) -> None:
        self.rings.append(np.asarray(uv, float))
        self.ring_xyz.append(xyz)


def _segment_points(a: np.ndarray, b: np.ndarray, scale: np.ndarray, step: float) -> np.ndarray:
    length = float(np.linalg.norm((b - a) * scale))
    n = max(1, int(math.ceil(length / step - 1e-9))) if math.isfinite(step) and step > 0 else 1
    n = min(n, 2000)
    s = np.arange(1, n)[:, None] / n
    return a + s * (b - a)


def _eval_list(surf: SurfaceGeom, uv: np.ndarray) -> List[np.ndarray]:
    if len(uv) == 0:
        return []
    return list(surf.evaluate(uv[:, 0], uv[:, 1])[0])


def _build_domain(face: Face, surf: SurfaceGeom, loops: List[_UVLoop], scale: np.ndarray, step: float) -> _Domain:
    dom = _Domain()
    pu, pv = surf.period_u, surf.period_v
    winding = [lp for lp in loops if lp.wind_u or lp.wind_v]
    plain = [lp for lp in loops if not (lp.wind_u or lp.wind_v)]

    if not winding:
        if not plain:
            raise TessellationError("face has no usable loops")
        areas = [_signed_area(lp.uv) for lp in plain]
        outer_i = int(np.argmax(areas))
        if areas[outer_i] <= 0:
            raise TessellationError("no counter-clockwise outer loop in UV")
        outer = plain[outer_i]
        dom.add(outer.uv, list(outer.xyz))
        lo, hi = outer.uv.min(axis=0), outer.uv.max(axis=0)
        for i, lp in enumerate(plain):
            if i == outer_i:
                continue
            uv = lp.uv.copy()
            for axis, period in ((0, pu), (1, pv)):
                if period:
                    c = 0.5 * (uv[:, axis].min() + uv[:, axis].max())
                    mid = 0.5 * (lo[axis] + hi[axis])
                    uv[:, axis] += period * np.round((mid - c) / period)
            dom.add(uv, list(lp.xyz))
        return dom

    axis = 0 if all(lp.wind_u and not lp.wind_v for lp in winding) else (
        1 if all(lp.wind_v and not lp.wind_u for lp in winding) else -1)
    if axis < 0:
        raise TessellationError("loops wind in both periodic directions")
    period = pu if axis == 0 else pv
    other = 1 - axis
    winds = [(lp.wind_u if axis == 0 else lp.wind_v) for lp in winding]
    rotated = [_rotate_to_min(lp, axis, period) for lp in winding]

    def closed_run(lp: _UVLoop, w: int):
        # loop as an open run from its cut point to the translated copy of it
        end = lp.uv[0].copy()
        end[axis] += w * period
        return np.vstack([lp.uv, end]), list(lp.xyz) + [lp.xyz[0]]

    if len(winding) == 2 and sorted(winds) == [-1, 1]:
        plus = rotated[winds.index(1)]
        minus = rotated[winds.index(-1)]
        a_uv, a_xyz = closed_run(plus, 1)
        b_uv, b_xyz = closed_run(minus, -1)
        b_uv = b_uv.copy()
        b_uv[:, axis] += period
        # both cut sides are one line a period apart: share their 3-D points so they weld
        shift = np.zeros(2)
        shift[axis] = period
        cut_l = _segment_points(b_uv[-1], a_uv[0], scale, step)
        cut_r = (cut_l + shift)[::-1]
        cut_xyz = _eval_list(surf, cut_l)
        uv = np.vstack([a_uv, cut_r, b_uv, cut_l])
        xyz = a_xyz + cut_xyz[::-1] + b_xyz + cut_xyz
        if _signed_area(uv) <= 0:
            raise TessellationError("band loops are inconsistently oriented")
        dom.add(uv, xyz)
    elif len(winding) == 1:
        w = winds[0]
        lp = rotated[0]
        poles = _poles(surf) if axis == 0 else []
        run_uv, run_xyz = closed_run(lp, w)
        level = run_uv[:, other]
        # material lies to the left of the run
        want_high = w > 0
        cands = [p for p in poles if (p >= level.max() - 1e-12 if want_high else p <= level.min() + 1e-12)]
        if not cands:
            raise TessellationError("single winding loop without a pole to close the domain")
        pole = min(cands, key=lambda p: abs(p - level.mean()))
        a = run_uv[-1].copy()
        a[other] = pole
        b = run_uv[0].copy()
        b[other] = pole
        shift = np.zeros(2)
        shift[axis] = w * period
        side = _segment_points(run_uv[-1], a, scale, step)
        pole_line = np.vstack([a, _segment_points(a, b, scale, step), b])
        side_xyz = _eval_list(surf, side)
        pole_xyz = _eval_list(surf, a[None, :]) * len(pole_line)
        pole_pts = np.vstack([side, pole_line, (side - shift)[::-1]])
        uv = np.vstack([run_uv, pole_pts])
        xyz = run_xyz + side_xyz + pole_xyz + side_xyz[::-1]
        if _signed_area(uv) <= 0:
            raise TessellationError("cap loop is inconsistently oriented")
        dom.add(uv, xyz)
    else:
        raise TessellationError(f"unsupported winding loop configuration {winds}")

    lo = dom.rings[0].min(axis=0)
    hi = dom.rings[0].max(axis=0)
    for lp in plain:
        uv = lp.uv.copy()
        for ax, per in ((0, pu), (1, pv)):
            if per:
                c = 0.5 * (uv[:, ax].min() + uv[:, ax].max())
                uv[:, ax] += per * np.round((0.5 * (lo[ax] + hi[ax]) - c) / per)
        dom.add(uv, list(lp.xyz))
    return dom


def _scales(surf: SurfaceGeom, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, float]:
    us = np.linspace(lo[0], hi[0], 9)
    vs = np.linspace(lo[1], hi[1], 9)
    gu, gv = np.meshgrid(us, vs, indexing="ij")
    gu, gv = gu.ravel(), gv.ravel()
    _, Su, Sv = surf.derivs(gu, gv)
    su = float(np.linalg.norm(Su, axis=1).max())
    sv = float(np.linalg.norm(Sv, axis=1).max())
    kappa = float(np.max(surf.curvature(gu, gv))) if surf.kind.value != "Plane" else 0.0
    return np.array([max(su, 1e-12), max(sv, 1e-12)]), kappa


def tessellate_face(face: Face, solid: BRepSolid, spec: TessellationSpec,
                    _ctx: Optional[_Context] = None) -> FaceMesh:
    """Triangulate one trimmed face; raises ``TessellationError`` if it must be skipped."""
    ctx = _ctx or _Context(solid, spec)
    surf = solid.surface_of(face)
    raw = _loop_points(ctx, face)
    if not raw:
        raise TessellationError("face has no edge loops")
    try:
        loops = [_to_uv(ctx, surf, pts) for pts in raw]
    except GeometryError as exc:
        if isinstance(exc, TessellationError):
            raise
        raise LoopInversionError(str(exc)) from exc
    if not face.same_sense:
        loops = [_UVLoop(lp.uv[::-1].copy(), lp.xyz[::-1].copy(), -lp.wind_u, -lp.wind_v) for lp in loops]

    allpts = np.vstack([lp.uv for lp in loops])
    scale, kappa = _scales(surf, allpts.min(axis=0), allpts.max(axis=0))
    step = _metric_step(kappa, ctx.chord, ctx.angle, ctx.max_len)
    if math.isfinite(step):
        step = max(step, ctx.floor)
    dom = _build_domain(face, surf, loops, scale, step)

    rings = [r * scale for r in dom.rings]
    try:
        poly = Polygon(rings[0], rings[1:])
    except ValueError as exc:
        raise SelfIntersectionError(str(exc)) from exc
    if not poly.is_valid:
        raise SelfIntersectionError(shapely.is_valid_reason(poly))

    # interior grid (offset rows) in metric-scaled UV
    grid = np.zeros((0, 2))
    if math.isfinite(step):
        minx, miny, maxx, maxy = poly.bounds
        area = poly.area
        h = step
        if area / (h * h * 0.866) > _MAX_GRID_POINTS:
            h = math.sqrt(area / (0.866 * _MAX_GRID_POINTS))
        dy = h * math.sqrt(3.0) / 2.0
        ys = np.arange(miny + 0.5 * dy, maxy, dy)
        if ys.size:
            rows = []
            for k, y in enumerate(ys):
                x0 = minx + (0.5 if k % 2 else 0.0) * h + 0.25 * h
                xs = np.arange(x0, maxx, h)
                rows.append(np.column_stack([xs, np.full_like(xs, y)]))
            grid = np.vstack(rows) if rows else grid
        if len(grid):
            inside = shapely.contains_xy(poly, grid[:, 0], grid[:, 1])
            grid = grid[inside]
        if len(grid):
            far = shapely.distance(poly.boundary, shapely.points(grid)) > 0.6 * h
            grid = grid[far]

    ring_pts = np.vstack(rings)
    nb = len(ring_pts)
    pts2 = np.vstack([ring_pts, grid]) if len(grid) else ring_pts
    segs = []
    off = 0
    for r in rings:
        n = len(r)
        idx = np.arange(off, off + n)
        segs.append(np.column_stack([idx, np.roll(idx, -1)]))
        off += n
    segs = np.vstack(segs)
    try:
        out = _triangle.triangulate({"vertices": pts2, "segments": segs}, "pQ")
    except Exception as exc:  # triangle raises bare RuntimeError
        raise TessellationError(f"triangulation failed: {exc}") from exc
    tri = np.asarray(out.get("triangles", np.zeros((0, 3), int)), dtype=np.int64)
    tv = np.asarray(out["vertices"], dtype=float)
    if len(tv) != len(pts2) or not np.array_equal(tv, pts2):
        raise SelfIntersectionError("triangulator inserted vertices (intersecting boundary)")
    if len(tri):
        cent = tv[tri].mean(axis=1)
        tri = tri[shapely.contains_xy(poly, cent[:, 0], cent[:, 1])]
        a, b, c = tv[tri[:, 0]], tv[tri[:, 1]], tv[tri[:, 2]]
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        tri[cross < 0] = tri[cross < 0][:, [0, 2, 1]]

    # map to 3D: boundary points keep their shared coordinates
    xyz = np.empty((len(pts2), 3))
    fixed = np.zeros(len(pts2), bool)
    k = 0
    for ring_xyz in dom.ring_xyz:
        for p in ring_xyz:
            if p is not None:
                xyz[k] = p
                fixed[k] = True
            k += 1
    free = ~fixed
    if free.any():
        uv = pts2[free] / scale
        xyz[free] = surf.evaluate(uv[:, 0], uv[:, 1])[0]
    assert k == nb

    if not face.same_sense:
        tri = tri[:, [0, 2, 1]]
    return _compact(face.id, xyz, tri, solid.diag)


def _compact(face_id: int, xyz: np.ndarray, tri: np.ndarray, diag: float) -> FaceMesh:
    xyz = xyz + 0.0  # normalise -0.0
    uniq, inv = np.unique(xyz, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    tri = inv[tri] if len(tri) else np.zeros((0, 3), np.int64)
    if len(tri):
        ok = (tri[:, 0] != tri[:, 1]) & (tri[:, 1] != tri[:, 2]) & (tri[:, 0] != tri[:, 2])
        tri = tri[ok]
        tri = tri[triangle_areas(uniq, tri) > 1e-14 * diag * diag]
    used = np.unique(tri)
    remap = np.full(len(uniq), -1, np.int64)
    remap[used] = np.arange(len(used))
    return FaceMesh(face_id, uniq[used], remap[tri].astype(np.int64))


def tessellate_solid(solid: BRepSolid, spec: TessellationSpec) -> SolidMesh:
    """Tessellate every face in face-id order; failing faces land in the skip report."""
    ctx = _Context(solid, spec)
    meshes: List[FaceMesh] = []
    skipped: List[SkipRecord] = []
    for face in solid.faces:
        try:
            mesh = tessellate_face(face, solid, spec, ctx)
        except (GeometryError, ValueError) as exc:
            LOGGER.info("face %d skipped: %s", face.id, exc)
            skipped.append(SkipRecord(face.id, f"{type(exc).__name__}: {exc}"))
            continue
        if len(mesh.triangles) == 0:
            skipped.append(SkipRecord(face.id, "empty triangulation"))
            continue
        meshes.append(mesh)
    return SolidMesh(meshes, skipped)


__all__ = [
    "COARSE",
    "FaceMesh",
    "LoopInversionError",
    "SPECS",
    "SelfIntersectionError",
    "SkipRecord",
    "SolidMesh",
    "T0",
    "T1",
    "T2",
    "TessellationError",
    "TessellationSpec",
    "get_spec",
    "tessellate_face",
    "tessellate_solid",
    "triangle_areas",
]
