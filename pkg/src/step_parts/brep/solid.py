"""B-Rep reconstruction from a parsed STEP entity graph."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..step_parser import Enum, Ref, StepEntityGraph, Typed
from .geometry import (
    BSplineCurve,
    BSplineSurface,
    ChordCurve,
    Circle,
    Cone,
    Curve,
    Cylinder,
    DegenerateGeometryError,
    Ellipse,
    ExtrusionSurface,
    GeometryError,
    Line,
    Placement,
    Plane,
    PrimitiveType,
    RevolutionSurface,
    Sphere,
    SurfaceGeom,
    Torus,
    UnsupportedSurface,
    classify,
)

LOGGER = logging.getLogger(__name__)


class NoShellError(GeometryError):
    pass


class UnresolvedGeometryError(GeometryError):
    pass


@dataclass
class Loop:
    # (edge index, traversed start->end?) in effective loop order
    edges: List[Tuple[int, bool]]
    outer: bool = False


@dataclass
class Face:
    id: int
    step_id: int
    surface_id: int
    same_sense: bool
    loops: List[Loop]
    primitive: PrimitiveType
    vertex_loops: List[np.ndarray] = field(default_factory=list)

    @property
    def orientation(self) -> float:
        return 1.0 if self.same_sense else -1.0


@dataclass
class TopoEdge:
    id: int
    step_id: int
    curve: Curve
    t_start: float
    t_end: float
    start: np.ndarray
    end: np.ndarray
    start_vertex: int
    end_vertex: int
    incidences: List[Tuple[int, bool]] = field(default_factory=list)

    @property
    def mid_parameter(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    @property
    def faces(self) -> List[int]:
        return [f for f, _ in self.incidences]


@dataclass
class BRepSolid:
    faces: List[Face]
    edges: List[TopoEdge]
    surfaces: List[SurfaceGeom]
    shells: List[List[int]]
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    diagnostics: List[str] = field(default_factory=list)

    @property
    def diag(self) -> float:
        d = float(np.linalg.norm(self.bbox_max - self.bbox_min))
        return d if d > 0 else 1.0

    @property
    def tol_vertex(self) -> float:
        return 1e-6 * self.diag

    @property
    def tol_onsurface(self) -> float:
        return 1e-5 * self.diag

    def surface_of(self, face: Face) -> SurfaceGeom:
        return self.surfaces[face.surface_id]


def _flag(value) -> bool:
    if isinstance(value, Enum):
        return value.name.upper() in ("T", "TRUE")
    return bool(value)


_SHELL_ROOTS = ("MANIFOLD_SOLID_BREP", "BREP_WITH_VOIDS", "SHELL_BASED_SURFACE_MODEL")
_FACE_KEYWORDS = ("ADVANCED_FACE", "FACE_SURFACE")


class _Builder:
    def __init__(self, graph: StepEntityGraph):
        self.g = graph
        self.surfaces: List[SurfaceGeom] = []
        self.surface_index: Dict[int, int] = {}
        self.edges: List[TopoEdge] = []
        self.edge_index: Dict[int, int] = {}
        self.diagnostics: List[str] = []
        self.angle_factor = self._plane_angle_factor()

    # -- primitive resolution --------------------------------------------------

    def rec(self, ref, *expected: str):
        if not isinstance(ref, Ref):
            raise UnresolvedGeometryError(f"expected an instance reference, found {ref!r}")
        record = self.g.entities.get(ref.id)
        if record is None:
            raise UnresolvedGeometryError(f"#{ref.id} is undefined")
        if expected and not any(record.has(k) for k in expected):
            raise UnresolvedGeometryError(
                f"#{ref.id} is {record.keyword}, expected one of {', '.join(expected)}"
            )
        return record

    def point(self, ref) -> np.ndarray:
        coords = self.rec(ref, "CARTESIAN_POINT").part("CARTESIAN_POINT")[1]
        xyz = [float(c) for c in coords] + [0.0] * (3 - len(coords))
        return np.array(xyz[:3])

    def direction(self, ref) -> np.ndarray:
        ratios = self.rec(ref, "DIRECTION").part("DIRECTION")[1]
        xyz = [float(c) for c in ratios] + [0.0] * (3 - len(ratios))
        return np.array(xyz[:3])

    def vector(self, ref) -> Tuple[np.ndarray, float]:
        args = self.rec(ref, "VECTOR").part("VECTOR")
        mag = args[2]
        if isinstance(mag, Typed):
            mag = mag.args[0]
        return self.direction(args[1]), float(mag)

    def axis2(self, ref) -> Placement:
        args = self.rec(ref, "AXIS2_PLACEMENT_3D").part("AXIS2_PLACEMENT_3D")
        origin = self.point(args[1])
        axis = self.direction(args[2]) if isinstance(args[2], Ref) else None
        refd = self.direction(args[3]) if len(args) > 3 and isinstance(args[3], Ref) else None
        return Placement.from_axes(origin, axis, refd)

    def axis1(self, ref) -> Tuple[np.ndarray, np.ndarray]:
        args = self.rec(ref, "AXIS1_PLACEMENT").part("AXIS1_PLACEMENT")
        origin = self.point(args[1])
        axis = self.direction(args[2]) if isinstance(args[2], Ref) else np.array([0.0, 0.0, 1.0])
        return origin, axis

    def _plane_angle_factor(self) -> float:
        for record in self.g.entities.values():
            if not (record.has("PLANE_ANGLE_UNIT") and record.has("CONVERSION_BASED_UNIT")):
                continue
            args = record.part("CONVERSION_BASED_UNIT")
            try:
                measure = self.g[args[1]]
                value = measure.args[0] if not measure.parts else measure.part(measure.keywords[0])[0]
                if isinstance(value, Typed):
                    value = value.args[0]
                factor = float(value)
            except (KeyError, IndexError, TypeError, ValueError):
                continue
            if factor > 0:
                return factor
        return 1.0

    # -- curves ------------------------------------------------------------------

    def curve(self, ref, start: np.ndarray, end: np.ndarray) -> Curve:
        record = self.rec(ref)
        kw = record.keywords
        if record.has("LINE"):
            args = record.part("LINE")
            d, mag = self.vector(args[2])
            return Line(self.point(args[1]), d, mag)
        if record.has("CIRCLE"):
            args = record.part("CIRCLE")
            return Circle(self.axis2(args[1]), float(args[2]))
        if record.has("ELLIPSE"):
            args = record.part("ELLIPSE")
            return Ellipse(self.axis2(args[1]), float(args[2]), float(args[3]))
        if record.has("B_SPLINE_CURVE_WITH_KNOTS"):
            return self._bspline_curve(record)
        for wrapper in ("SURFACE_CURVE", "SEAM_CURVE", "INTERSECTION_CURVE", "TRIMMED_CURVE"):
            if record.has(wrapper):
                return self.curve(record.part(wrapper)[1], start, end)
        self.diagnostics.append(f"curve #{ref.id} ({' '.join(kw)}) unsupported; using chord")
        return ChordCurve(start, end, record.keyword)

    def _bspline_curve(self, record) -> BSplineCurve:
        if record.is_complex:
            base = record.part("B_SPLINE_CURVE")
            degree, ctrl, closed = base[0], base[1], base[3]
            knots_args = record.part("B_SPLINE_CURVE_WITH_KNOTS")
            mults, knots = knots_args[0], knots_args[1]
            rational = record.part("RATIONAL_B_SPLINE_CURVE")
            weights = rational[0] if rational else None
        else:
            args = record.args
            degree, ctrl, closed, mults, knots = args[1], args[2], args[4], args[6], args[7]
            weights = None
        pts = np.array([self.point(r) for r in ctrl])
        return BSplineCurve(int(degree), pts, knots, mults, weights, _flag(closed))

    # -- surfaces ----------------------------------------------------------------

    def surface(self, ref, center: np.ndarray, half: float) -> int:
        if ref.id in self.surface_index:
            return self.surface_index[ref.id]
        record = self.rec(ref)
        geom = self._make_surface(record, ref.id, center, half)
        self.surface_index[ref.id] = len(self.surfaces)
        self.surfaces.append(geom)
        return self.surface_index[ref.id]

    def _make_surface(self, record, step_id: int, center, half) -> SurfaceGeom:
        if record.has("PLANE"):
            return Plane(self.axis2(record.part("PLANE")[1]))
        if record.has("CYLINDRICAL_SURFACE"):
            args = record.part("CYLINDRICAL_SURFACE")
            return Cylinder(self.axis2(args[1]), float(args[2]))
        if record.has("CONICAL_SURFACE"):
            args = record.part("CONICAL_SURFACE")
            semi = float(args[3]) * self.angle_factor
            if not 0 < semi < 0.5 * math.pi and 0 < float(args[3]) < 0.5 * math.pi:
                semi = float(args[3])
            return Cone(self.axis2(args[1]), float(args[2]), semi)
        if record.has("SPHERICAL_SURFACE"):
            args = record.part("SPHERICAL_SURFACE")
            return Sphere(self.axis2(args[1]), float(args[2]))
        if record.has("TOROIDAL_SURFACE") or record.has("DEGENERATE_TOROIDAL_SURFACE"):
            args = record.part("TOROIDAL_SURFACE") or record.part("DEGENERATE_TOROIDAL_SURFACE")
            return Torus(self.axis2(args[1]), float(args[2]), float(args[3]))
        if record.has("SURFACE_OF_LINEAR_EXTRUSION"):
            args = record.part("SURFACE_OF_LINEAR_EXTRUSION")
            curve = self.curve(args[1], center, center)
            d, mag = self.vector(args[2])
            return ExtrusionSurface(curve, d, mag, center, half)
        if record.has("SURFACE_OF_REVOLUTION"):
            args = record.part("SURFACE_OF_REVOLUTION")
            curve = self.curve(args[1], center, center)
            origin, axis = self.axis1(args[2])
            return RevolutionSurface(curve, origin, axis, center, half)
        if record.has("B_SPLINE_SURFACE_WITH_KNOTS"):
            return self._bspline_surface(record)
        if any("SURFACE" in k or k == "PLANE" for k in record.keywords):
            self.diagnostics.append(f"surface #{step_id} ({record.keyword}) unsupported")
            return UnsupportedSurface(record.keyword)
        raise UnresolvedGeometryError(f"#{step_id} ({record.keyword}) is not a surface")

    def _bspline_surface(self, record) -> BSplineSurface:
        if record.is_complex:
            base = record.part("B_SPLINE_SURFACE")
            p, q, ctrl, uc, vc = base[0], base[1], base[2], base[4], base[5]
            kn = record.part("B_SPLINE_SURFACE_WITH_KNOTS")
            umults, vmults, uknots, vknots = kn[0], kn[1], kn[2], kn[3]
            rational = record.part("RATIONAL_B_SPLINE_SURFACE")
            weights = rational[0] if rational else None
        else:
            a = record.args
            p, q, ctrl, uc, vc = a[1], a[2], a[3], a[5], a[6]
            umults, vmults, uknots, vknots = a[8], a[9], a[10], a[11]
            weights = None
        net = np.array([[self.point(r) for r in row] for row in ctrl])
        return BSplineSurface(int(p), int(q), net, uknots, umults, vknots, vmults, weights,
                              _flag(uc), _flag(vc))

    # -- topology ----------------------------------------------------------------

    def edge(self, ref, vertices: Dict[int, np.ndarray], tol_vertex: float) -> int:
        if ref.id in self.edge_index:
            return self.edge_index[ref.id]
        args = self.rec(ref, "EDGE_CURVE").part("EDGE_CURVE")
        v0, v1 = args[1].id, args[2].id
        start, end = vertices[v0], vertices[v1]
        curve = self.curve(args[3], start, end)
        same = _flag(args[4])
        closed = v0 == v1 or float(np.linalg.norm(start - end)) <= tol_vertex
        t0, t1 = self._edge_range(curve, start, end, same, closed)
        for t, p, label in ((t0, start, "start"), (t1, end, "end")):
            gap = float(np.linalg.norm(curve.evaluate(np.array([t]))[0] - p))
            if gap > tol_vertex:
                self.diagnostics.append(f"edge #{ref.id} {label} vertex off curve by {gap:.3g}")
        edge = TopoEdge(len(self.edges), ref.id, curve, t0, t1, start, end, v0, v1)
        self.edge_index[ref.id] = edge.id
        self.edges.append(edge)
        return edge.id

    @staticmethod
    def _edge_range(curve: Curve, start, end, same: bool, closed: bool) -> Tuple[float, float]:
        if isinstance(curve, ChordCurve):
            return 0.0, 1.0
        t0 = float(curve.invert(start[None, :])[0])
        t1 = float(curve.invert(end[None, :])[0])
        period = curve.period
        if period:
            if closed:
                return t0, t0 + period if same else t0 - period
            if same:
                dt = math.fmod(t1 - t0, period)
                dt = dt + period if dt <= 0 else dt
                return t0, t0 + dt
            dt = math.fmod(t0 - t1, period)
            dt = dt + period if dt <= 0 else dt
            return t0, t0 - dt
        if closed:
            lo, hi = curve.domain
            return (lo, hi) if same else (hi, lo)
        return t0, t1


def _vertex_point(builder: _Builder, ref) -> np.ndarray:
    record = builder.rec(ref, "VERTEX_POINT")
    return builder.point(record.part("VERTEX_POINT")[1])


def _shell_faces(builder: _Builder, ref) -> List[int]:
    record = builder.rec(ref)
    if record.has("ORIENTED_CLOSED_SHELL") or record.has("ORIENTED_OPEN_SHELL"):
        args = record.part("ORIENTED_CLOSED_SHELL") or record.part("ORIENTED_OPEN_SHELL")
        return _shell_faces(builder, args[2])
    args = record.part("CLOSED_SHELL") or record.part("OPEN_SHELL") or record.part("CONNECTED_FACE_SET")
    if args is None:
        raise UnresolvedGeometryError(f"#{ref.id} ({record.keyword}) is not a shell")
    return [r.id for r in args[1] if isinstance(r, Ref)]


def _shell_refs(graph: StepEntityGraph) -> List[Ref]:
    roots = sorted(i for kw in _SHELL_ROOTS for i in graph.by_keyword(kw))
    refs: List[Ref] = []
    for i in roots:
        record = graph.entities[i]
        if record.has("SHELL_BASED_SURFACE_MODEL"):
            refs.extend(r for r in record.part("SHELL_BASED_SURFACE_MODEL")[1] if isinstance(r, Ref))
        elif record.has("BREP_WITH_VOIDS"):
            args = record.part("BREP_WITH_VOIDS") or ()
            base = record.part("MANIFOLD_SOLID_BREP")
            if base is not None:
                refs.append(base[1])
            if record.is_complex:
                refs.extend(r for r in args[0] if isinstance(r, Ref))
            else:
                refs.append(args[1])
                refs.extend(r for r in args[2] if isinstance(r, Ref))
        else:
            refs.append(record.part("MANIFOLD_SOLID_BREP")[1])
    seen = set()
    unique = []
    for r in refs:
        if r.id not in seen:
            seen.add(r.id)
            unique.append(r)
    return unique


def build_brep(graph: StepEntityGraph) -> BRepSolid:
    """Resolve faces, shared topological edges and surfaces from the entity graph."""
    shell_refs = _shell_refs(graph)
    if not shell_refs:
        raise NoShellError("no MANIFOLD_SOLID_BREP or SHELL_BASED_SURFACE_MODEL in file")
    b = _Builder(graph)

    shells_step: List[List[int]] = [_shell_faces(b, r) for r in shell_refs]
    face_ids: List[int] = []
    seen_faces = set()
    for shell in shells_step:
        for fid in shell:
            if fid not in seen_faces:
                seen_faces.add(fid)
                face_ids.append(fid)

    # first pass: topology references and vertex positions for the bounding box
    face_bounds: Dict[int, list] = {}
    vertices: Dict[int, np.ndarray] = {}
    for fid in face_ids:
        record = b.rec(Ref(fid))
        kw = next((k for k in _FACE_KEYWORDS if record.has(k)), None)
        if kw is None:
            b.diagnostics.append(f"face #{fid} ({record.keyword}) unsupported; skipped")
            continue
        args = record.part(kw)
        bounds = []
        for bref in args[1]:
            brec = b.rec(bref, "FACE_BOUND", "FACE_OUTER_BOUND")
            bkw = "FACE_OUTER_BOUND" if brec.has("FACE_OUTER_BOUND") else "FACE_BOUND"
            bargs = brec.part(bkw)
            loop = b.rec(bargs[1])
            bounds.append((bkw == "FACE_OUTER_BOUND", loop, _flag(bargs[2]), bargs[1].id))
            if loop.has("EDGE_LOOP"):
                for oe in loop.part("EDGE_LOOP")[1]:
                    oe_args = b.rec(oe, "ORIENTED_EDGE").part("ORIENTED_EDGE")
                    ec = b.rec(oe_args[3])
                    while ec.has("ORIENTED_EDGE"):
                        ec = b.rec(ec.part("ORIENTED_EDGE")[3])
                    ec_args = ec.part("EDGE_CURVE")
                    if ec_args is None:
                        raise UnresolvedGeometryError(f"oriented edge #{oe.id} has no EDGE_CURVE")
                    for vref in ec_args[1:3]:
                        if vref.id not in vertices:
                            vertices[vref.id] = _vertex_point(b, vref)
            elif loop.has("VERTEX_LOOP"):
                vref = loop.part("VERTEX_LOOP")[1]
                if vref.id not in vertices:
                    vertices[vref.id] = _vertex_point(b, vref)
        face_bounds[fid] = (args, bounds)

    if vertices:
        pts = np.array(list(vertices.values()))
    else:
        pts = np.array([b.point(Ref(i)) for i in graph.by_keyword("CARTESIAN_POINT")] or [np.zeros(3)])
    bbox_min, bbox_max = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (bbox_min + bbox_max)
    diag = float(np.linalg.norm(bbox_max - bbox_min)) or 1.0
    tol_vertex = 1e-6 * diag

    faces: List[Face] = []
    step_to_face: Dict[int, int] = {}
    for fid in face_ids:
        if fid not in face_bounds:
            continue
        args, bounds = face_bounds[fid]
        srec = b.rec(args[2])
        surface_id = b.surface(args[2], center, 0.5 * diag)
        face = Face(len(faces), fid, surface_id, _flag(args[3]), [], classify(srec.keywords))
        for outer, loop_rec, orientation, loop_id in bounds:
            if loop_rec.has("VERTEX_LOOP"):
                face.vertex_loops.append(vertices[loop_rec.part("VERTEX_LOOP")[1].id])
                continue
            if not loop_rec.has("EDGE_LOOP"):
                b.diagnostics.append(f"loop #{loop_id} ({loop_rec.keyword}) unsupported")
                continue
            entries: List[Tuple[int, bool]] = []
            for oe in loop_rec.part("EDGE_LOOP")[1]:
                oe_args = b.rec(oe).part("ORIENTED_EDGE")
                forward = _flag(oe_args[4])
                target = oe_args[3]
                while b.rec(target).has("ORIENTED_EDGE"):
                    inner = b.rec(target).part("ORIENTED_EDGE")
                    forward = forward == _flag(inner[4])
                    target = inner[3]
                entries.append((b.edge(target, vertices, tol_vertex), forward))
            if not orientation:
                entries = [(e, not fwd) for e, fwd in reversed(entries)]
            face.loops.append(Loop(entries, outer))
        for loop in face.loops:
            for e, fwd in loop.edges:
                b.edges[e].incidences.append((face.id, fwd))
        step_to_face[fid] = face.id
        faces.append(face)

    # vertices alone under-estimate the extent of curved edges (e.g. a circle with one vertex)
    for edge in b.edges:
        ts = np.linspace(edge.t_start, edge.t_end, 17)
        samples = edge.curve.evaluate(ts)
        bbox_min = np.minimum(bbox_min, samples.min(axis=0))
        bbox_max = np.maximum(bbox_max, samples.max(axis=0))
    shells = [[step_to_face[f] for f in shell if f in step_to_face] for shell in shells_step]
    for edge in b.edges:
        if len(edge.incidences) > 2:
            b.diagnostics.append(f"edge #{edge.step_id} is non-manifold ({len(edge.incidences)} uses)")
    for msg in b.diagnostics:
        LOGGER.debug(msg)
    return BRepSolid(faces, b.edges, b.surfaces, shells, bbox_min, bbox_max, b.diagnostics)


def eval_surface(surface: SurfaceGeom, u: float, v: float) -> Tuple[np.ndarray, np.ndarray]:
    """Point and unit natural normal at a single parameter pair."""
    P, N, _ = surface.evaluate(np.array([u], float), np.array([v], float))
    return P[0], N[0]


def invert_point(surface: SurfaceGeom, p, tol: float = math.inf) -> Tuple[float, float]:
    """Parameters of ``p`` on ``surface``; raises if the iterative projection does not converge."""
    u, v, ok = surface.invert(np.asarray(p, dtype=float)[None, :], tol)
    if not ok[0]:
        raise GeometryError("point projection did not converge")
    return float(u[0]), float(v[0])


def eval_edge(edge: TopoEdge, t: float) -> np.ndarray:
    lo, hi = sorted((edge.t_start, edge.t_end))
    slack = 1e-9 * max(1.0, abs(hi - lo))
    if not (lo - slack <= t <= hi + slack):
        raise ValueError(f"parameter {t} outside edge range [{lo}, {hi}]")
    return edge.curve.evaluate(np.array([t], float))[0]


__all__ = [
    "BRepSolid",
    "DegenerateGeometryError",
    "Face",
    "Loop",
    "NoShellError",
    "TopoEdge",
    "UnresolvedGeometryError",
    "build_brep",
    "eval_edge",
    "eval_surface",
    "invert_point",
]
