"""Programmatic STEP authoring for fixtures and synthetic corpora.

Every builder returns Part-21 text for a small, exactly-known B-Rep. Loops are
written so that the face lies on the left when viewed from the outward normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .step_parser import Ref, StepEntityGraph, _format_float

Vec = Sequence[float]


def _f(x: float) -> str:
    return _format_float(float(x))


def _tuple(values: Vec) -> str:
    return "(" + ",".join(_f(v) for v in values) + ")"


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


class StepWriter:
    """Append-only entity writer; methods return instance ids."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.lines: List[str] = []
        self._points: Dict[Tuple[float, ...], int] = {}

    def add(self, body: str) -> int:
        self.lines.append(body)
        return len(self.lines)

    def point(self, p: Vec) -> int:
        key = tuple(float(c) for c in p)
        if key not in self._points:
            self._points[key] = self.add(f"CARTESIAN_POINT('',{_tuple(key)})")
        return self._points[key]

    def direction(self, d: Vec) -> int:
        return self.add(f"DIRECTION('',{_tuple(_unit(d))})")

    def axis2(self, origin: Vec, z: Vec = (0, 0, 1), x: Vec = (1, 0, 0)) -> int:
        return self.add(
            f"AXIS2_PLACEMENT_3D('',#{self.point(origin)},#{self.direction(z)},#{self.direction(x)})"
        )

    def vertex(self, p: Vec) -> int:
        return self.add(f"VERTEX_POINT('',#{self.point(p)})")

    def line(self, p: Vec, d: Vec) -> int:
        vec = self.add(f"VECTOR('',#{self.direction(d)},1.)")
        return self.add(f"LINE('',#{self.point(p)},#{vec})")

    def circle(self, center: Vec, radius: float, z: Vec = (0, 0, 1), x: Vec = (1, 0, 0)) -> int:
        return self.add(f"CIRCLE('',#{self.axis2(center, z, x)},{_f(radius)})")

    def bspline_curve(self, degree: int, ctrl: np.ndarray, knots: Vec, mults: Sequence[int]) -> int:
        pts = ",".join(f"#{self.point(p)}" for p in ctrl)
        return self.add(
            f"B_SPLINE_CURVE_WITH_KNOTS('',{degree},({pts}),.UNSPECIFIED.,.F.,.F.,"
            f"({','.join(str(m) for m in mults)}),{_tuple(knots)},.UNSPECIFIED.)"
        )

    def edge(self, v0: int, v1: int, curve: int, same_sense: bool = True) -> int:
        return self.add(f"EDGE_CURVE('',#{v0},#{v1},#{curve},{'.T.' if same_sense else '.F.'})")

    def loop(self, oriented: Sequence[Tuple[int, bool]]) -> int:
        oes = [self.add(f"ORIENTED_EDGE('',*,*,#{e},{'.T.' if fwd else '.F.'})") for e, fwd in oriented]
        return self.add("EDGE_LOOP('',(" + ",".join(f"#{i}" for i in oes) + "))")

    def face(self, loops: Sequence[Tuple[int, bool]], surface: int, same_sense: bool = True) -> int:
        bounds = [
            self.add(f"{'FACE_OUTER_BOUND' if outer else 'FACE_BOUND'}('',#{lp},.T.)") for lp, outer in loops
        ]
        refs = ",".join(f"#{b}" for b in bounds)
        return self.add(f"ADVANCED_FACE('',({refs}),#{surface},{'.T.' if same_sense else '.F.'})")

    def plane(self, origin: Vec, normal: Vec, x: Vec) -> int:
        return self.add(f"PLANE('',#{self.axis2(origin, normal, x)})")

    def cylinder(self, origin: Vec, radius: float, z: Vec = (0, 0, 1), x: Vec = (1, 0, 0)) -> int:
        return self.add(f"CYLINDRICAL_SURFACE('',#{self.axis2(origin, z, x)},{_f(radius)})")

    def cone(self, origin: Vec, radius: float, semi_angle: float, z: Vec = (0, 0, 1), x: Vec = (1, 0, 0)) -> int:
        return self.add(
            f"CONICAL_SURFACE('',#{self.axis2(origin, z, x)},{_f(radius)},{_f(semi_angle)})"
        )

    def sphere(self, origin: Vec, radius: float, z: Vec = (0, 0, 1), x: Vec = (1, 0, 0)) -> int:
        return self.add(f"SPHERICAL_SURFACE('',#{self.axis2(origin, z, x)},{_f(radius)})")

    def bspline_surface(self, p: int, q: int, net: np.ndarray, uk: Vec, um: Sequence[int],
                        vk: Vec, vm: Sequence[int], weights: Optional[np.ndarray] = None) -> int:
        rows = ",".join("(" + ",".join(f"#{self.point(pt)}" for pt in row) + ")" for row in net)
        mults = f"({','.join(str(m) for m in um)}),({','.join(str(m) for m in vm)})"
        knots = f"{_tuple(uk)},{_tuple(vk)}"
        if weights is None:
            return self.add(
                f"B_SPLINE_SURFACE_WITH_KNOTS('',{p},{q},({rows}),.UNSPECIFIED.,.F.,.F.,.F.,"
                f"{mults},{knots},.UNSPECIFIED.)"
            )
        wrows = ",".join(_tuple(r) for r in weights)
        return self.add(
            f"(BOUNDED_SURFACE() B_SPLINE_SURFACE({p},{q},({rows}),.UNSPECIFIED.,.F.,.F.,.F.) "
            f"B_SPLINE_SURFACE_WITH_KNOTS({mults},{knots},.UNSPECIFIED.) GEOMETRIC_REPRESENTATION_ITEM() "
            f"RATIONAL_B_SPLINE_SURFACE(({wrows})) REPRESENTATION_ITEM('') SURFACE())"
        )

    def closed_solid(self, faces: Sequence[int]) -> int:
        shell = self.add("CLOSED_SHELL('',(" + ",".join(f"#{f}" for f in faces) + "))")
        return self.add(f"MANIFOLD_SOLID_BREP('{self.name}',#{shell})")

    def open_surface_model(self, faces: Sequence[int]) -> int:
        shell = self.add("OPEN_SHELL('',(" + ",".join(f"#{f}" for f in faces) + "))")
        return self.add(f"SHELL_BASED_SURFACE_MODEL('{self.name}',(#{shell}))")

    def _context(self, item: int) -> None:
        length = self.add("( LENGTH_UNIT() NAMED_UNIT(*) SI_UNIT(.MILLI.,.METRE.) )")
        angle = self.add("( NAMED_UNIT(*) PLANE_ANGLE_UNIT() SI_UNIT($,.RADIAN.) )")
        solid = self.add("( NAMED_UNIT(*) SI_UNIT($,.STERADIAN.) SOLID_ANGLE_UNIT() )")
        unc = self.add(
            f"UNCERTAINTY_MEASURE_WITH_UNIT(LENGTH_MEASURE(1.E-07),#{length},'distance_accuracy_value','')"
        )
        ctx = self.add(
            "( GEOMETRIC_REPRESENTATION_CONTEXT(3) GLOBAL_UNCERTAINTY_ASSIGNED_CONTEXT((#%d)) "
            "GLOBAL_UNIT_ASSIGNED_CONTEXT((#%d,#%d,#%d)) REPRESENTATION_CONTEXT('','') )"
            % (unc, length, angle, solid)
        )
        origin = self.axis2((0, 0, 0))
        self.add(f"ADVANCED_BREP_SHAPE_REPRESENTATION('{self.name}',(#{item},#{origin}),#{ctx})")

    def text(self, item: Optional[int] = None) -> str:
        if item is not None:
            self._context(item)
        head = [
            "ISO-10303-21;",
            "HEADER;",
            "FILE_DESCRIPTION(('step_parts synthetic fixture'),'2;1');",
            f"FILE_NAME('{self.name}.step','2026-01-01T00:00:00',(''),(''),'step_parts','step_parts','');",
            "FILE_SCHEMA(('AUTOMOTIVE_DESIGN { 1 0 10303 214 1 1 1 1 }'));",
            "ENDSEC;",
            "DATA;",
        ]
        body = [f"#{i}={line};" for i, line in enumerate(self.lines, start=1)]
        return "\n".join(head + body + ["ENDSEC;", "END-ISO-10303-21;"]) + "\n"


# ---------------------------------------------------------------- prisms


@dataclass
class Arc:
    """Profile segment bulging around ``center``; ``ccw`` is the sweep sense seen from +z."""

    center: Tuple[float, float]
    ccw: bool = True


@dataclass
class Spline:
    """Profile segment following a clamped B-spline through interior control points."""

    ctrl: Sequence[Tuple[float, float]]


def _clamped(n_ctrl: int, degree: int):
    inner = n_ctrl - degree - 1
    knots = [0.0] + [(i + 1) / (inner + 1) for i in range(inner)] + [1.0]
    mults = [degree + 1] + [1] * inner + [degree + 1]
    return knots, mults


@dataclass
class Hole:
    center: Tuple[float, float]
    radius: float
    seam: bool = False


def _sweep(a: np.ndarray, b: np.ndarray, c: np.ndarray, ccw: bool) -> float:
    ta = math.atan2(a[1] - c[1], a[0] - c[0])
    tb = math.atan2(b[1] - c[1], b[0] - c[0])
    d = (tb - ta) % (2 * math.pi) if ccw else (ta - tb) % (2 * math.pi)
    return d if d > 0 else 2 * math.pi


def prism(profile: Sequence[Tuple[float, float]], height: float,
          arcs: Optional[Dict[int, Arc]] = None, holes: Sequence[Hole] = (),
          name: str = "prism") -> str:
    """Extrude a CCW profile along +z.

    ``arcs[i]`` turns segment ``profile[i] -> profile[i+1]`` into a circular arc.
    """
    arcs = arcs or {}
    w = StepWriter(name)
    n = len(profile)
    P = [np.array([x, y], float) for x, y in profile]
    vb = [w.vertex((p[0], p[1], 0.0)) for p in P]
    vt = [w.vertex((p[0], p[1], height)) for p in P]
    verticals = [w.edge(vb[i], vt[i], w.line((P[i][0], P[i][1], 0.0), (0, 0, 1))) for i in range(n)]
    bottom_e, top_e, side_faces = [], [], []
    for i in range(n):
        j = (i + 1) % n
        a, b = P[i], P[j]
        arc = arcs.get(i)
        if isinstance(arc, Spline):
            ctrl2 = np.array([a] + [np.asarray(c, float) for c in arc.ctrl] + [b])
            deg = min(3, len(ctrl2) - 1)
            knots, mults = _clamped(len(ctrl2), deg)
            cb_pts = np.column_stack([ctrl2, np.zeros(len(ctrl2))])
            ct_pts = np.column_stack([ctrl2, np.full(len(ctrl2), height)])
            cb = w.bspline_curve(deg, cb_pts, knots, mults)
            eb = w.edge(vb[i], vb[j], cb)
            et = w.edge(vt[i], vt[j], w.bspline_curve(deg, ct_pts, knots, mults))
            vec = w.add(f"VECTOR('',#{w.direction((0, 0, 1))},{_f(height)})")
            surf = w.add(f"SURFACE_OF_LINEAR_EXTRUSION('',#{cb},#{vec})")
            same = True
        elif arc is None:
            d = (b[0] - a[0], b[1] - a[1], 0.0)
            eb = w.edge(vb[i], vb[j], w.line((a[0], a[1], 0.0), d))
            et = w.edge(vt[i], vt[j], w.line((a[0], a[1], height), d))
            normal = (d[1], -d[0], 0.0)
            surf = w.plane((a[0], a[1], 0.0), normal, d)
            same = True
        else:
            c = np.array(arc.center, float)
            r = float(np.linalg.norm(a - c))
            xdir = ((a[0] - c[0]) / r, (a[1] - c[1]) / r, 0.0)
            cb = w.circle((c[0], c[1], 0.0), r, (0, 0, 1), xdir)
            ct = w.circle((c[0], c[1], height), r, (0, 0, 1), xdir)
            eb = w.edge(vb[i], vb[j], cb, arc.ccw)
            et = w.edge(vt[i], vt[j], ct, arc.ccw)
            surf = w.cylinder((c[0], c[1], 0.0), r, (0, 0, 1), xdir)
            same = arc.ccw
        bottom_e.append(eb)
        top_e.append(et)
        loop = w.loop([(eb, True), (verticals[j], True), (et, False), (verticals[i], False)])
        side_faces.append(w.face([(loop, True)], surf, same))

    bottom_loops = [(w.loop([(e, False) for e in reversed(bottom_e)]), True)]
    top_loops = [(w.loop([(e, True) for e in top_e]), True)]
    hole_faces = []
    for hole in holes:
        cx, cy = hole.center
        r = hole.radius
        vhb = w.vertex((cx + r, cy, 0.0))
        vht = w.vertex((cx + r, cy, height))
        hb = w.edge(vhb, vhb, w.circle((cx, cy, 0.0), r))
        ht = w.edge(vht, vht, w.circle((cx, cy, height), r))
        bottom_loops.append((w.loop([(hb, True)]), False))
        top_loops.append((w.loop([(ht, False)]), False))
        surf = w.cylinder((cx, cy, 0.0), r)
        if hole.seam:
            seam = w.edge(vhb, vht, w.line((cx + r, cy, 0.0), (0, 0, 1)))
            loop = w.loop([(hb, False), (seam, True), (ht, True), (seam, False)])
            hole_faces.append(w.face([(loop, True)], surf, False))
        else:
            lb = w.loop([(hb, False)])
            lt = w.loop([(ht, True)])
            hole_faces.append(w.face([(lb, False), (lt, False)], surf, False))
    bottom = w.face(bottom_loops, w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    top = w.face(top_loops, w.plane((0, 0, height), (0, 0, 1), (1, 0, 0)))
    solid = w.closed_solid([bottom, top] + side_faces + hole_faces)
    return w.text(solid)


def box(dx: float = 1.0, dy: float = 1.0, dz: float = 1.0, name: str = "cube") -> str:
    return prism([(0, 0), (dx, 0), (dx, dy), (0, dy)], dz, name=name)


def filleted_block(a: float = 2.0, b: float = 1.5, h: float = 1.0, r: float = 0.4,
                   name: str = "filleted_block") -> str:
    """Block with its (a, b) vertical edge rounded by a tangent quarter-cylinder."""
    profile = [(0, 0), (a, 0), (a, b - r), (a - r, b), (0, b)]
    return prism(profile, h, arcs={2: Arc((a - r, b - r), True)}, name=name)


def rounded_plate(a: float, b: float, h: float, r: float, holes: Sequence[Hole] = (),
                  name: str = "rounded_plate") -> str:
    profile = [
        (r, 0), (a - r, 0), (a, r), (a, b - r), (a - r, b), (r, b), (0, b - r), (0, r),
    ]
    arcs = {
        1: Arc((a - r, r)),
        3: Arc((a - r, b - r)),
        5: Arc((r, b - r)),
        7: Arc((r, r)),
    }
    return prism(profile, h, arcs=arcs, holes=holes, name=name)


def notched_block(a: float, b: float, h: float, r: float, name: str = "notched_block") -> str:
    """Block with a concave quarter-round notch at the (a, b) corner (reversed-sense cylinder)."""
    profile = [(0, 0), (a, 0), (a, b - r), (a - r, b), (0, b)]
    return prism(profile, h, arcs={2: Arc((a, b), False)}, name=name)


def l_bracket(a: float, b: float, t: float, h: float, name: str = "l_bracket") -> str:
    return prism([(0, 0), (a, 0), (a, t), (t, t), (t, b), (0, b)], h, name=name)


# ---------------------------------------------------------------- revolved shapes


def split_cylinder(r: float = 1.0, h: float = 2.0, name: str = "split_cylinder") -> str:
    """Cylinder whose lateral surface is trimmed into two half faces along two seam lines."""
    w = StepWriter(name)
    a0, b0 = w.vertex((r, 0, 0)), w.vertex((-r, 0, 0))
    a1, b1 = w.vertex((r, 0, h)), w.vertex((-r, 0, h))
    c0, c1 = w.circle((0, 0, 0), r), w.circle((0, 0, h), r)
    eb1, eb2 = w.edge(a0, b0, c0), w.edge(b0, a0, c0)
    et1, et2 = w.edge(a1, b1, c1), w.edge(b1, a1, c1)
    sa = w.edge(a0, a1, w.line((r, 0, 0), (0, 0, 1)))
    sb = w.edge(b0, b1, w.line((-r, 0, 0), (0, 0, 1)))
    cyl = w.cylinder((0, 0, 0), r)
    half1 = w.face([(w.loop([(eb1, True), (sb, True), (et1, False), (sa, False)]), True)], cyl)
    half2 = w.face([(w.loop([(eb2, True), (sa, True), (et2, False), (sb, False)]), True)], cyl)
    bottom = w.face([(w.loop([(eb2, False), (eb1, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    top = w.face([(w.loop([(et1, True), (et2, True)]), True)], w.plane((0, 0, h), (0, 0, 1), (1, 0, 0)))
    return w.text(w.closed_solid([half1, half2, bottom, top]))


def cylinder(r: float = 1.0, h: float = 2.0, name: str = "cylinder") -> str:
    """Full cylinder; the lateral face is closed by a single seam edge used twice."""
    w = StepWriter(name)
    a0, a1 = w.vertex((r, 0, 0)), w.vertex((r, 0, h))
    eb = w.edge(a0, a0, w.circle((0, 0, 0), r))
    et = w.edge(a1, a1, w.circle((0, 0, h), r))
    seam = w.edge(a0, a1, w.line((r, 0, 0), (0, 0, 1)))
    lateral = w.face([(w.loop([(eb, True), (seam, True), (et, False), (seam, False)]), True)],
                     w.cylinder((0, 0, 0), r))
    bottom = w.face([(w.loop([(eb, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    top = w.face([(w.loop([(et, True)]), True)], w.plane((0, 0, h), (0, 0, 1), (1, 0, 0)))
    return w.text(w.closed_solid([lateral, bottom, top]))


def cone_frustum(r: float = 1.0, h: float = 1.0, semi_angle: float = math.radians(20),
                 name: str = "cone_frustum") -> str:
    w = StepWriter(name)
    r1 = r + h * math.tan(semi_angle)
    a0, a1 = w.vertex((r, 0, 0)), w.vertex((r1, 0, h))
    eb = w.edge(a0, a0, w.circle((0, 0, 0), r))
    et = w.edge(a1, a1, w.circle((0, 0, h), r1))
    seam = w.edge(a0, a1, w.line((r, 0, 0), (r1 - r, 0, h)))
    lateral = w.face([(w.loop([(eb, True), (seam, True), (et, False), (seam, False)]), True)],
                     w.cone((0, 0, 0), r, semi_angle))
    bottom = w.face([(w.loop([(eb, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    top = w.face([(w.loop([(et, True)]), True)], w.plane((0, 0, h), (0, 0, 1), (1, 0, 0)))
    return w.text(w.closed_solid([lateral, bottom, top]))


def sphere_octant(r: float = 1.0, name: str = "sphere_octant") -> str:
    """Positive octant of a sphere: one spherical face (touching the pole) and three quarter discs."""
    w = StepWriter(name)
    o, x, y, z = (w.vertex(p) for p in ((0, 0, 0), (r, 0, 0), (0, r, 0), (0, 0, r)))
    axy = w.edge(x, y, w.circle((0, 0, 0), r, (0, 0, 1), (1, 0, 0)))
    ayz = w.edge(y, z, w.circle((0, 0, 0), r, (1, 0, 0), (0, 1, 0)))
    azx = w.edge(z, x, w.circle((0, 0, 0), r, (0, 1, 0), (0, 0, 1)))
    lx = w.edge(o, x, w.line((0, 0, 0), (1, 0, 0)))
    ly = w.edge(o, y, w.line((0, 0, 0), (0, 1, 0)))
    lz = w.edge(o, z, w.line((0, 0, 0), (0, 0, 1)))
    sph = w.face([(w.loop([(axy, True), (ayz, True), (azx, True)]), True)], w.sphere((0, 0, 0), r))
    fz = w.face([(w.loop([(ly, True), (axy, False), (lx, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    fx = w.face([(w.loop([(lz, True), (ayz, False), (ly, False)]), True)], w.plane((0, 0, 0), (-1, 0, 0), (0, 1, 0)))
    fy = w.face([(w.loop([(lx, True), (azx, False), (lz, False)]), True)], w.plane((0, 0, 0), (0, -1, 0), (0, 0, 1)))
    return w.text(w.closed_solid([sph, fz, fx, fy]))


def capsule(r: float = 1.0, h: float = 1.5, name: str = "capsule") -> str:
    """Cylinder closed by a flat bottom and a tangent hemispherical dome (pole inside the face)."""
    w = StepWriter(name)
    a0, a1 = w.vertex((r, 0, 0)), w.vertex((r, 0, h))
    eb = w.edge(a0, a0, w.circle((0, 0, 0), r))
    et = w.edge(a1, a1, w.circle((0, 0, h), r))
    seam = w.edge(a0, a1, w.line((r, 0, 0), (0, 0, 1)))
    lateral = w.face([(w.loop([(eb, True), (seam, True), (et, False), (seam, False)]), True)],
                     w.cylinder((0, 0, 0), r))
    dome = w.face([(w.loop([(et, True)]), True)], w.sphere((0, 0, h), r))
    bottom = w.face([(w.loop([(eb, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    return w.text(w.closed_solid([bottom, lateral, dome]))


def revolved_dome(r: float = 1.0, height: float = 0.8, name: str = "revolved_dome") -> str:
    """B-spline profile revolved about +z from the base circle up to the axis, on a flat disc."""
    w = StepWriter(name)
    prof = np.array([(r, 0, 0), (r, 0, 0.5 * height), (0.6 * r, 0, height), (0, 0, height)])
    knots, mults = _clamped(4, 3)
    pc = w.bspline_curve(3, prof, knots, mults)
    ax = w.add(f"AXIS1_PLACEMENT('',#{w.point((0, 0, 0))},#{w.direction((0, 0, 1))})")
    surf = w.add(f"SURFACE_OF_REVOLUTION('',#{pc},#{ax})")
    a0 = w.vertex((r, 0, 0))
    eb = w.edge(a0, a0, w.circle((0, 0, 0), r))
    dome = w.face([(w.loop([(eb, True)]), True)], surf)
    bottom = w.face([(w.loop([(eb, False)]), True)], w.plane((0, 0, 0), (0, 0, -1), (1, 0, 0)))
    return w.text(w.closed_solid([bottom, dome]))


def wave_wall(a: float = 2.0, b: float = 1.2, h: float = 0.8, name: str = "wave_wall") -> str:
    """Block whose back side is an extruded B-spline (linear extrusion surface)."""
    return prism([(0, 0), (a, 0), (a, b), (0, b)], h,
                 arcs={2: Spline([(0.7 * a, b + 0.3), (0.3 * a, b - 0.3)])}, name=name)


# ---------------------------------------------------------------- open surfaces


def planar_patch(a: float = 1.0, b: float = 1.0, name: str = "planar_patch") -> str:
    w = StepWriter(name)
    pts = [(0, 0, 0), (a, 0, 0), (a, b, 0), (0, b, 0)]
    v = [w.vertex(p) for p in pts]
    edges = []
    for i in range(4):
        j = (i + 1) % 4
        d = tuple(np.subtract(pts[j], pts[i]))
        edges.append(w.edge(v[i], v[j], w.line(pts[i], d)))
    face = w.face([(w.loop([(e, True) for e in edges]), True)], w.plane((0, 0, 0), (0, 0, 1), (1, 0, 0)))
    return w.text(w.open_surface_model([face]))


def wavy_net(size: float = 2.0, amplitude: float = 0.3, n: int = 5) -> np.ndarray:
    xs = np.linspace(0.0, size, n)
    net = np.zeros((n, n, 3))
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            net[i, j] = (x, y, amplitude * math.sin(2.2 * x / size * math.pi) * math.cos(1.7 * y / size * math.pi))
    return net


def bspline_patch(size: float = 2.0, amplitude: float = 0.3, rational: bool = False,
                  name: str = "bspline_patch") -> str:
    """Single clamped bicubic B-spline face bounded by its four iso-boundary curves."""
    w = StepWriter(name)
    net = wavy_net(size, amplitude, 5)
    knots, mults = (0.0, 0.5, 1.0), (4, 1, 4)
    weights = None
    if rational:
        weights = np.ones(net.shape[:2])
        weights[2, 2] = 1.6
        weights[1, 3] = 0.7
    surf = w.bspline_surface(3, 3, net, knots, mults, knots, mults, weights)
    c = [net[0, 0], net[-1, 0], net[-1, -1], net[0, -1]]
    v = [w.vertex(p) for p in c]
    # boundary rows of a clamped net are the boundary curves (non-rational weights on the rim)
    e_v0 = w.edge(v[0], v[1], w.bspline_curve(3, net[:, 0], knots, mults))
    e_u1 = w.edge(v[1], v[2], w.bspline_curve(3, net[-1, :], knots, mults))
    e_v1 = w.edge(v[3], v[2], w.bspline_curve(3, net[:, -1], knots, mults))
    e_u0 = w.edge(v[0], v[3], w.bspline_curve(3, net[0, :], knots, mults))
    loop = w.loop([(e_v0, True), (e_u1, True), (e_v1, False), (e_u0, False)])
    face = w.face([(loop, True)], surf)
    return w.text(w.open_surface_model([face]))


# ---------------------------------------------------------------- utilities


def transform_graph(graph: StepEntityGraph, R: np.ndarray, t: np.ndarray) -> StepEntityGraph:
    """Rigidly move every 3-D point and direction of ``graph``."""
    from .step_parser import EntityRecord

    R = np.asarray(R, float)
    t = np.asarray(t, float)
    out = StepEntityGraph(header=dict(graph.header))
    for i, rec in graph.entities.items():
        if rec.keyword == "CARTESIAN_POINT" and len(rec.args[1]) == 3:
            p = R @ np.asarray(rec.args[1], float) + t
            rec = EntityRecord(rec.keyword, (rec.args[0], tuple(float(c) for c in p)))
        elif rec.keyword == "DIRECTION" and len(rec.args[1]) == 3:
            d = R @ np.asarray(rec.args[1], float)
            rec = EntityRecord(rec.keyword, (rec.args[0], tuple(float(c) for c in d)))
        out.entities[i] = rec
    return out


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a, b, c, d = q
    return np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ])


FIXTURES = {
    "cube": lambda: box(1.0, 1.0, 1.0, name="cube"),
    "split_cylinder": split_cylinder,
    "filleted_block": filleted_block,
    "cylinder": cylinder,
    "cone_frustum": cone_frustum,
    "sphere_octant": sphere_octant,
    "rounded_plate": lambda: rounded_plate(4.0, 3.0, 0.5, 0.6, holes=[Hole((1.5, 1.5), 0.5), Hole((2.8, 1.6), 0.4, seam=True)]),
    "capsule": capsule,
    "revolved_dome": revolved_dome,
    "wave_wall": wave_wall,
    "notched_block": lambda: notched_block(2.0, 1.5, 1.0, 0.5),
    "l_bracket": lambda: l_bracket(2.0, 1.5, 0.4, 1.0),
    "planar_patch": planar_patch,
    "bspline_patch": bspline_patch,
}


def synthetic_corpus(count: int, seed: int = 0) -> List[Tuple[str, str]]:
    """Deterministic list of (model id, STEP text) with randomised dimensions."""
    rng = np.random.default_rng(seed)
    makers = [
        lambda i: box(*rng.uniform(0.5, 3.0, 3), name=f"box_{i:03d}"),
        lambda i: split_cylinder(rng.uniform(0.3, 1.5), rng.uniform(0.5, 3.0), name=f"split_cyl_{i:03d}"),
        lambda i: cylinder(rng.uniform(0.3, 1.5), rng.uniform(0.5, 3.0), name=f"cyl_{i:03d}"),
        lambda i: filleted_block(*rng.uniform(1.5, 3.0, 2), rng.uniform(0.5, 2.0), rng.uniform(0.2, 0.6),
                                 name=f"fillet_{i:03d}"),
        lambda i: cone_frustum(rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0), rng.uniform(0.1, 0.6),
                               name=f"cone_{i:03d}"),
        lambda i: sphere_octant(rng.uniform(0.5, 2.0), name=f"octant_{i:03d}"),
        lambda i: rounded_plate(rng.uniform(3.0, 5.0), rng.uniform(2.5, 4.0), rng.uniform(0.3, 0.8),
                                rng.uniform(0.3, 0.7), holes=[Hole((1.5, 1.3), rng.uniform(0.2, 0.5),
                                                                   bool(rng.integers(2)))],
                                name=f"plate_{i:03d}"),
        lambda i: l_bracket(rng.uniform(1.5, 3.0), rng.uniform(1.5, 3.0), rng.uniform(0.2, 0.5),
                            rng.uniform(0.5, 2.0), name=f"bracket_{i:03d}"),
        lambda i: notched_block(rng.uniform(1.5, 3.0), rng.uniform(1.5, 3.0), rng.uniform(0.5, 2.0),
                                rng.uniform(0.3, 0.6), name=f"notch_{i:03d}"),
    ]
    models = []
    for i in range(count):
        text = makers[i % len(makers)](i)
        models.append((f"model_{i:03d}", text))
    return models


__all__ = [
    "Arc",
    "Spline",
    "capsule",
    "revolved_dome",
    "wave_wall",
    "FIXTURES",
    "Hole",
    "StepWriter",
    "box",
    "bspline_patch",
    "cone_frustum",
    "cylinder",
    "filleted_block",
    "l_bracket",
    "notched_block",
    "planar_patch",
    "prism",
    "random_rotation",
    "rounded_plate",
    "sphere_octant",
    "split_cylinder",
    "synthetic_corpus",
    "transform_graph",
    "Ref",
]
