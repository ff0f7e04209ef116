"""Analytic curve and surface evaluators.

Parameterisations follow ISO 10303-42. All evaluators are vectorised: parameters
are 1-D arrays and points come back as (m, 3) arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import bspline

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class PrimitiveType(str, enum.Enum):
    PLANE = "Plane"
    CYLINDER = "Cylinder"
    CONE = "Cone"
    SPHERE = "Sphere"
    TORUS = "Torus"
    EXTRUSION = "ExtrusionSurface"
    REVOLUTION = "RevolutionSurface"
    BSPLINE = "BSpline"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


_SURFACE_KEYWORDS = {
    "PLANE": PrimitiveType.PLANE,
    "CYLINDRICAL_SURFACE": PrimitiveType.CYLINDER,
    "CONICAL_SURFACE": PrimitiveType.CONE,
    "SPHERICAL_SURFACE": PrimitiveType.SPHERE,
    "TOROIDAL_SURFACE": PrimitiveType.TORUS,
    "DEGENERATE_TOROIDAL_SURFACE": PrimitiveType.TORUS,
    "SURFACE_OF_LINEAR_EXTRUSION": PrimitiveType.EXTRUSION,
    "SURFACE_OF_REVOLUTION": PrimitiveType.REVOLUTION,
    "B_SPLINE_SURFACE_WITH_KNOTS": PrimitiveType.BSPLINE,
    "B_SPLINE_SURFACE": PrimitiveType.BSPLINE,
    "BEZIER_SURFACE": PrimitiveType.BSPLINE,
    "UNIFORM_SURFACE": PrimitiveType.BSPLINE,
    "QUASI_UNIFORM_SURFACE": PrimitiveType.BSPLINE,
    "RATIONAL_B_SPLINE_SURFACE": PrimitiveType.BSPLINE,
}


def classify(keywords) -> PrimitiveType:
    """Primitive type from a surface entity keyword (or the keywords of a complex record)."""
    if isinstance(keywords, str):
        keywords = (keywords,)
    found = [_SURFACE_KEYWORDS[k] for k in keywords if k in _SURFACE_KEYWORDS]
    if not found:
        return PrimitiveType.OTHER
    # a complex record may mix B_SPLINE_SURFACE with its subtypes; all map to BSPLINE
    return found[0]


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise DegenerateGeometryError("zero-length direction")
    return v / n


@dataclass(frozen=True)
class Placement:
    origin: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def from_axes(cls, origin, axis=None, ref=None) -> "Placement":
        origin = np.asarray(origin, dtype=float)
        z = _unit(np.asarray(axis if axis is not None else (0.0, 0.0, 1.0), dtype=float))
        if ref is None:
            ref = (1.0, 0.0, 0.0) if abs(z[0]) < 0.9 else (0.0, 1.0, 0.0)
        ref = np.asarray(ref, dtype=float)
        xr = ref - np.dot(ref, z) * z
        if np.linalg.norm(xr) < 1e-9 * max(np.linalg.norm(ref), 1.0):
            raise DegenerateGeometryError("reference direction parallel to axis")
        x = _unit(xr)
        y = np.cross(z, x)
        return cls(origin, x, y, z)

    def local(self, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = np.atleast_2d(pts) - self.origin
        return d @ self.x, d @ self.y, d @ self.z

    def world(self, a, b, c) -> np.ndarray:
        return (
            self.origin
            + np.multiply.outer(a, self.x)
            + np.multiply.outer(b, self.y)
            + np.multiply.outer(c, self.z)
        )


def _wrap(a: np.ndarray, period: float) -> np.ndarray:
    return np.mod(a, period)


# ---------------------------------------------------------------- curves


class Curve:
    period: Optional[float] = None
    domain: Tuple[float, float] = (-math.inf, math.inf)

    def evaluate(self, t) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t) -> np.ndarray:
        raise NotImplementedError

    def invert(self, pts) -> np.ndarray:
        raise NotImplementedError

    def curvature_bound(self) -> float:
        return 0.0


class Line(Curve):
    def __init__(self, point, direction, magnitude: float = 1.0):
        self.point = np.asarray(point, dtype=float)
        self.direction = _unit(np.asarray(direction, dtype=float)) * float(magnitude)
        if magnitude <= 0:
            raise DegenerateGeometryError("line vector magnitude must be positive")

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.point + np.multiply.outer(t, self.direction)

    def derivative(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.broadcast_to(self.direction, (t.shape[0], 3)).copy()

    def invert(self, pts):
        d = np.atleast_2d(pts) - self.point
        return d @ self.direction / np.dot(self.direction, self.direction)


class Circle(Curve):
    period = TWO_PI
    domain = (0.0, TWO_PI)

    def __init__(self, placement: Placement, radius: float):
        if not radius > 0:
            raise DegenerateGeometryError(f"circle radius {radius} must be positive")
        self.placement = placement
        self.radius = float(radius)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        r = self.radius
        return self.placement.world(r * np.cos(t), r * np.sin(t), np.zeros_like(t))

    def derivative(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        r = self.radius
        p = self.placement
        return np.multiply.outer(-r * np.sin(t), p.x) + np.multiply.outer(r * np.cos(t), p.y)

    def invert(self, pts):
        a, b, _ = self.placement.local(pts)
        return _wrap(np.arctan2(b, a), TWO_PI)

    def curvature_bound(self) -> float:
        return 1.0 / self.radius


class Ellipse(Curve):
    period = TWO_PI
    domain = (0.0, TWO_PI)

    def __init__(self, placement: Placement, semi1: float, semi2: float):
        if not (semi1 > 0 and semi2 > 0):
            raise DegenerateGeometryError("ellipse semi-axes must be positive")
        self.placement = placement
        self.a = float(semi1)
        self.b = float(semi2)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.placement.world(self.a * np.cos(t), self.b * np.sin(t), np.zeros_like(t))

    def derivative(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.placement
        return np.multiply.outer(-self.a * np.sin(t), p.x) + np.multiply.outer(self.b * np.cos(t), p.y)

    def invert(self, pts):
        x, y, _ = self.placement.local(pts)
        t = np.arctan2(y / self.b, x / self.a)
        # a few Newton steps on the squared distance for off-curve points
        for _ in range(4):
            c, s = np.cos(t), np.sin(t)
            dx, dy = self.a * c - x, self.b * s - y
            tx, ty = -self.a * s, self.b * c
            g = dx * tx + dy * ty
            h = tx * tx + ty * ty + dx * (-self.a * c) + dy * (-self.b * s)
            step = np.where(np.abs(h) > 1e-300, g / np.where(h == 0, 1.0, h), 0.0)
            t = t - step
        return _wrap(t, TWO_PI)

    def curvature_bound(self) -> float:
        lo, hi = min(self.a, self.b), max(self.a, self.b)
        return hi / (lo * lo)


class BSplineCurve(Curve):
    def __init__(self, degree: int, ctrl, knots, mults, weights=None, closed: bool = False):
        self.p = int(degree)
        P = np.asarray(ctrl, dtype=float)
        w = np.ones(P.shape[0]) if weights is None else np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise DegenerateGeometryError("non-positive rational weight")
        self.Pw = np.hstack([P * w[:, None], w[:, None]])
        self.U = bspline.expand_knots(knots, mults)
        if self.U.shape[0] != P.shape[0] + self.p + 1:
            raise GeometryError(
                f"b-spline curve knot count {self.U.shape[0]} != {P.shape[0]} + {self.p} + 1"
            )
        self.domain = (float(self.U[self.p]), float(self.U[-self.p - 1]))
        self.closed = closed
        self._seed_t = None
        self._seed_p = None

    def evaluate(self, t):
        return bspline.curve_eval(self.U, self.p, self.Pw, t, derivative=False)[0]

    def derivative(self, t):
        return bspline.curve_eval(self.U, self.p, self.Pw, t)[1]

    def invert(self, pts):
        pts = np.atleast_2d(pts)
        t0, t1 = self.domain
        if self._seed_t is None:
            n = max(32, 4 * self.Pw.shape[0])
            self._seed_t = np.linspace(t0, t1, n)
            self._seed_p = self.evaluate(self._seed_t)
        d2 = ((pts[:, None, :] - self._seed_p[None, :, :]) ** 2).sum(-1)
        t = self._seed_t[np.argmin(d2, axis=1)]
        for _ in range(50):
            C, dC = bspline.curve_eval(self.U, self.p, self.Pw, t)
            r = C - pts
            g = (r * dC).sum(1)
            h = (dC * dC).sum(1)
            step = np.where(h > 0, g / np.where(h > 0, h, 1.0), 0.0)
            t_new = np.clip(t - step, t0, t1)
            moved = np.abs(t_new - t)
            t = t_new
            if moved.max(initial=0.0) < 1e-12:
                break
        return t

    def curvature_bound(self) -> float:
        t = np.linspace(*self.domain, 64)
        C, d1 = bspline.curve_eval(self.U, self.p, self.Pw, t)
        h = 1e-6 * (self.domain[1] - self.domain[0])
        _, d1b = bspline.curve_eval(self.U, self.p, self.Pw, np.clip(t + h, *self.domain))
        d2 = (d1b - d1) / h
        speed = np.linalg.norm(d1, axis=1)
        k = np.linalg.norm(np.cross(d1, d2), axis=1) / np.maximum(speed, 1e-300) ** 3
        return float(np.nanmax(k)) if k.size else 0.0


class ChordCurve(Curve):
    """Stand-in for unsupported curve kinds: the straight chord between edge vertices."""

    def __init__(self, start, end, keyword: str = ""):
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.keyword = keyword
        self.domain = (0.0, 1.0)

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.start + np.multiply.outer(t, self.end - self.start)

    def derivative(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.broadcast_to(self.end - self.start, (t.shape[0], 3)).copy()

    def invert(self, pts):
        d = self.end - self.start
        dd = float(np.dot(d, d))
        if dd == 0.0:
            return np.zeros(np.atleast_2d(pts).shape[0])
        return np.clip((np.atleast_2d(pts) - self.start) @ d / dd, 0.0, 1.0)


# ---------------------------------------------------------------- surfaces


class SurfaceGeom:
    """Base class. ``evaluate`` returns points, unit natural normals and a pole/apex mask."""

    kind = PrimitiveType.OTHER
    period_u: Optional[float] = None
    period_v: Optional[float] = None
    domain: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    closed_form = True

    def derivs(self, u, v):
        raise NotImplementedError

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        P, Su, Sv = self.derivs(u, v)
        return (P,) + self._normals_from_partials(u, v, Su, Sv)

    def _normals_from_partials(self, u, v, Su, Sv):
        n = np.cross(Su, Sv)
        norm = np.linalg.norm(n, axis=1)
        scale = np.maximum(np.linalg.norm(Su, axis=1) * np.linalg.norm(Sv, axis=1), 1e-300)
        singular = norm <= 1e-12 * scale
        if np.any(singular):
            # limit normal: nudge towards the middle of the domain and re-evaluate
            u0, u1, v0, v1 = self.domain
            idx = np.nonzero(singular)[0]
            uu, vv = u[idx].copy(), v[idx].copy()
            for eps in (1e-7, 1e-5, 1e-3):
                du = eps * (u1 - u0) * np.sign(0.5 * (u0 + u1) - uu + 1e-300)
                dv = eps * (v1 - v0) * np.sign(0.5 * (v0 + v1) - vv + 1e-300)
                _, a, b = self.derivs(uu + du, vv + dv)
                nn = np.cross(a, b)
                nl = np.linalg.norm(nn, axis=1)
                ok = nl > 0
                n[idx[ok]] = nn[ok]
                norm[idx[ok]] = nl[ok]
                if ok.all():
                    break
        with np.errstate(invalid="ignore", divide="ignore"):
            N = n / norm[:, None]
        return N, singular

    def invert(self, pts, tol: float = math.inf):
        """Return (u, v, ok) for (m, 3) points."""
        raise NotImplementedError

    def curvature(self, u, v) -> np.ndarray:
        """Upper bound of the principal curvature magnitudes at (u, v)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return _numeric_curvature(self, u, v)


def _numeric_curvature(surf: SurfaceGeom, u, v) -> np.ndarray:
    u0, u1, v0, v1 = surf.domain
    hu = 1e-5 * max(u1 - u0, 1e-9)
    hv = 1e-5 * max(v1 - v0, 1e-9)
    P, N, _ = surf.evaluate(u, v)
    Pu, Nu, _ = surf.evaluate(u + hu, v)
    Pv, Nv, _ = surf.evaluate(u, v + hv)
    ku = np.linalg.norm(Nu - N, axis=1) / np.maximum(np.linalg.norm(Pu - P, axis=1), 1e-300)
    kv = np.linalg.norm(Nv - N, axis=1) / np.maximum(np.linalg.norm(Pv - P, axis=1), 1e-300)
    return np.nan_to_num(np.maximum(ku, kv))


class Plane(SurfaceGeom):
    kind = PrimitiveType.PLANE
    domain = (-1.0, 1.0, -1.0, 1.0)

    def __init__(self, placement: Placement):
        self.placement = placement

    def derivs(self, u, v):
        p = self.placement
        P = p.world(u, v, np.zeros_like(u))
        m = u.shape[0]
        return P, np.tile(p.x, (m, 1)), np.tile(p.y, (m, 1))

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        p = self.placement
        return p.world(u, v, np.zeros_like(u)), np.tile(p.z, (u.shape[0], 1)), np.zeros(u.shape[0], bool)

    def invert(self, pts, tol=math.inf):
        a, b, _ = self.placement.local(pts)
        return a, b, np.ones(a.shape[0], bool)

    def curvature(self, u, v):
        return np.zeros(np.atleast_1d(u).shape[0])


class Cylinder(SurfaceGeom):
    kind = PrimitiveType.CYLINDER
    period_u = TWO_PI
    domain = (0.0, TWO_PI, -1.0, 1.0)

    def __init__(self, placement: Placement, radius: float):
        if not radius > 0:
            raise DegenerateGeometryError(f"cylinder radius {radius} must be positive")
        self.placement = placement
        self.radius = float(radius)

    def derivs(self, u, v):
        r = self.radius
        c, s = np.cos(u), np.sin(u)
        p = self.placement
        P = p.world(r * c, r * s, v)
        Su = p.world(-r * s, r * c, np.zeros_like(u)) - p.origin
        Sv = np.tile(p.z, (u.shape[0], 1))
        return P, Su, Sv

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        c, s = np.cos(u), np.sin(u)
        p = self.placement
        r = self.radius
        P = p.world(r * c, r * s, v)
        N = np.multiply.outer(c, p.x) + np.multiply.outer(s, p.y)
        return P, N, np.zeros(u.shape[0], bool)

    def invert(self, pts, tol=math.inf):
        a, b, c = self.placement.local(pts)
        return _wrap(np.arctan2(b, a), TWO_PI), c, np.ones(a.shape[0], bool)

    def curvature(self, u, v):
        return np.full(np.atleast_1d(u).shape[0], 1.0 / self.radius)


class Cone(SurfaceGeom):
    kind = PrimitiveType.CONE
    period_u = TWO_PI
    domain = (0.0, TWO_PI, -1.0, 1.0)

    def __init__(self, placement: Placement, radius: float, semi_angle: float):
        if radius < 0:
            raise DegenerateGeometryError(f"cone radius {radius} must be non-negative")
        if not (0.0 < semi_angle < 0.5 * math.pi):
            raise DegenerateGeometryError(f"cone semi-angle {semi_angle} outside (0, pi/2)")
        self.placement = placement
        self.radius = float(radius)
        self.semi_angle = float(semi_angle)
        self._tan = math.tan(semi_angle)

    @property
    def apex_v(self) -> float:
        return -self.radius / self._tan

    def derivs(self, u, v):
        c, s = np.cos(u), np.sin(u)
        rho = self.radius + v * self._tan
        p = self.placement
        P = p.world(rho * c, rho * s, v)
        Su = p.world(-rho * s, rho * c, np.zeros_like(u)) - p.origin
        Sv = p.world(self._tan * c, self._tan * s, np.ones_like(u)) - p.origin
        return P, Su, Sv

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        c, s = np.cos(u), np.sin(u)
        rho = self.radius + v * self._tan
        p = self.placement
        P = p.world(rho * c, rho * s, v)
        ca, sa = math.cos(self.semi_angle), math.sin(self.semi_angle)
        sign = np.where(rho < 0, -1.0, 1.0)
        N = sign[:, None] * (
            np.multiply.outer(ca * c, p.x) + np.multiply.outer(ca * s, p.y) - sa * p.z
        )
        apex = np.abs(rho) <= 1e-12 * max(self.radius, 1.0)
        return P, N, apex

    def invert(self, pts, tol=math.inf):
        a, b, z = self.placement.local(pts)
        u = _wrap(np.arctan2(b, a), TWO_PI)
        rho = np.hypot(a, b)
        ca = math.cos(self.semi_angle)
        v = ((rho - self.radius) * self._tan + z) * ca * ca
        return u, v, np.ones(a.shape[0], bool)

    def curvature(self, u, v):
        rho = np.abs(self.radius + np.atleast_1d(v) * self._tan)
        return math.cos(self.semi_angle) / np.maximum(rho, 1e-12 * max(self.radius, 1.0))


class Sphere(SurfaceGeom):
    kind = PrimitiveType.SPHERE
    period_u = TWO_PI
    domain = (0.0, TWO_PI, -0.5 * math.pi, 0.5 * math.pi)

    def __init__(self, placement: Placement, radius: float):
        if not radius > 0:
            raise DegenerateGeometryError(f"sphere radius {radius} must be positive")
        self.placement = placement
        self.radius = float(radius)

    def derivs(self, u, v):
        r = self.radius
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        p = self.placement
        P = p.world(r * cv * cu, r * cv * su, r * sv)
        Su = p.world(-r * cv * su, r * cv * cu, np.zeros_like(u)) - p.origin
        Sv = p.world(-r * sv * cu, -r * sv * su, r * cv) - p.origin
        return P, Su, Sv

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        p = self.placement
        N = np.multiply.outer(cv * cu, p.x) + np.multiply.outer(cv * su, p.y) + np.multiply.outer(sv, p.z)
        P = p.origin + self.radius * N
        pole = np.abs(cv) <= 1e-12
        return P, N, pole

    def invert(self, pts, tol=math.inf):
        a, b, c = self.placement.local(pts)
        return _wrap(np.arctan2(b, a), TWO_PI), np.arctan2(c, np.hypot(a, b)), np.ones(a.shape[0], bool)

    def curvature(self, u, v):
        return np.full(np.atleast_1d(u).shape[0], 1.0 / self.radius)


class Torus(SurfaceGeom):
    kind = PrimitiveType.TORUS
    period_u = TWO_PI
    period_v = TWO_PI
    domain = (0.0, TWO_PI, 0.0, TWO_PI)

    def __init__(self, placement: Placement, major: float, minor: float):
        if not (major > 0 and minor > 0):
            raise DegenerateGeometryError("torus radii must be positive")
        self.placement = placement
        self.major = float(major)
        self.minor = float(minor)

    def derivs(self, u, v):
        R, r = self.major, self.minor
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        rho = R + r * cv
        p = self.placement
        P = p.world(rho * cu, rho * su, r * sv)
        Su = p.world(-rho * su, rho * cu, np.zeros_like(u)) - p.origin
        Sv = p.world(-r * sv * cu, -r * sv * su, r * cv) - p.origin
        return P, Su, Sv

    def evaluate(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        R, r = self.major, self.minor
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        rho = R + r * cv
        p = self.placement
        P = p.world(rho * cu, rho * su, r * sv)
        sign = np.where(rho < 0, -1.0, 1.0)
        N = sign[:, None] * (
            np.multiply.outer(cv * cu, p.x) + np.multiply.outer(cv * su, p.y) + np.multiply.outer(sv, p.z)
        )
        return P, N, np.abs(rho) <= 1e-12 * R

    def invert(self, pts, tol=math.inf):
        a, b, c = self.placement.local(pts)
        u = _wrap(np.arctan2(b, a), TWO_PI)
        v = _wrap(np.arctan2(c, np.hypot(a, b) - self.major), TWO_PI)
        return u, v, np.ones(a.shape[0], bool)

    def curvature(self, u, v):
        cv = np.cos(np.atleast_1d(v))
        rho = np.abs(self.major + self.minor * cv)
        return np.maximum(1.0 / self.minor, np.abs(cv) / np.maximum(rho, 1e-12))


class _IterativeSurface(SurfaceGeom):
    """Surfaces inverted by seeded, damped Gauss-Newton projection."""

    closed_form = False
    seed_grid = 16
    max_iter = 50
    step_tol = 1e-10
    _seeds = None

    def _seed(self, pts):
        if self._seeds is None:
            u0, u1, v0, v1 = self.domain
            n = self.seed_grid
            if self.period_u:
                us = u0 + (u1 - u0) * np.arange(n) / n
            else:
                us = np.linspace(u0, u1, n)
            if self.period_v:
                vs = v0 + (v1 - v0) * np.arange(n) / n
            else:
                vs = np.linspace(v0, v1, n)
            gu, gv = np.meshgrid(us, vs, indexing="ij")
            gu, gv = gu.ravel(), gv.ravel()
            self._seeds = (gu, gv, self.derivs(gu, gv)[0])
        gu, gv, gp = self._seeds
        best = np.empty(pts.shape[0], dtype=np.int64)
        for s in range(0, pts.shape[0], 4096):
            chunk = pts[s : s + 4096]
            d2 = ((chunk[:, None, :] - gp[None, :, :]) ** 2).sum(-1)
            best[s : s + 4096] = np.argmin(d2, axis=1)
        return gu[best].copy(), gv[best].copy()

    def _clamp(self, u, v):
        u0, u1, v0, v1 = self.domain
        u = _wrap(u - u0, self.period_u) + u0 if self.period_u else np.clip(u, u0, u1)
        v = _wrap(v - v0, self.period_v) + v0 if self.period_v else np.clip(v, v0, v1)
        return u, v

    def invert(self, pts, tol=math.inf):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u, v = self._seed(pts)
        P, Su, Sv = self.derivs(u, v)
        r = P - pts
        dist = (r * r).sum(1)
        converged = np.zeros(pts.shape[0], bool)
        for _ in range(self.max_iter):
            active = ~converged
            if not active.any():
                break
            a = (Su * Su).sum(1)
            b = (Su * Sv).sum(1)
            c = (Sv * Sv).sum(1)
            gu = (Su * r).sum(1)
            gv = (Sv * r).sum(1)
            det = a * c - b * b
            ok = np.abs(det) > 1e-300
            safe = np.where(ok, det, 1.0)
            du = np.where(ok, -(c * gu - b * gv) / safe, -gu / np.maximum(a, 1e-300))
            dv = np.where(ok, -(a * gv - b * gu) / safe, -gv / np.maximum(c, 1e-300))
            lam = np.ones_like(u)
            pending = active.copy()
            nu, nv = u.copy(), v.copy()
            nP, nSu, nSv, nd = P.copy(), Su.copy(), Sv.copy(), dist.copy()
            for _ in range(12):
                idx = np.nonzero(pending)[0]
                if idx.size == 0:
                    break
                cu, cv = self._clamp(u[idx] + lam[idx] * du[idx], v[idx] + lam[idx] * dv[idx])
                cP, cSu, cSv = self.derivs(cu, cv)
                cr = cP - pts[idx]
                cd = (cr * cr).sum(1)
                accept = cd <= dist[idx] * (1 + 1e-12) + 1e-300
                acc = idx[accept]
                nu[acc], nv[acc] = cu[accept], cv[accept]
                nP[acc], nSu[acc], nSv[acc], nd[acc] = cP[accept], cSu[accept], cSv[accept], cd[accept]
                pending[acc] = False
                lam[idx[~accept]] *= 0.5
            step = np.hypot(nu - u, nv - v)
            stuck = pending  # no improving step found
            u, v, P, Su, Sv, dist = nu, nv, nP, nSu, nSv, nd
            r = P - pts
            converged |= active & ((step < self.step_tol) | stuck)
        ok = converged | (np.sqrt(dist) <= tol)
        return u, v, ok


class BSplineSurface(_IterativeSurface):
    kind = PrimitiveType.BSPLINE

    def __init__(self, p: int, q: int, ctrl, u_knots, u_mults, v_knots, v_mults, weights=None,
                 u_closed: bool = False, v_closed: bool = False):
        P = np.asarray(ctrl, dtype=float)
        if P.ndim != 3 or P.shape[2] != 3:
            raise GeometryError("b-spline control net must be (nu, nv, 3)")
        w = np.ones(P.shape[:2]) if weights is None else np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise DegenerateGeometryError("non-positive rational weight")
        self.p, self.q = int(p), int(q)
        self.Pw = np.concatenate([P * w[..., None], w[..., None]], axis=2)
        self.U = bspline.expand_knots(u_knots, u_mults)
        self.V = bspline.expand_knots(v_knots, v_mults)
        if self.U.shape[0] != P.shape[0] + self.p + 1 or self.V.shape[0] != P.shape[1] + self.q + 1:
            raise GeometryError("b-spline surface knot vector length mismatch")
        self.domain = (
            float(self.U[self.p]), float(self.U[-self.p - 1]),
            float(self.V[self.q]), float(self.V[-self.q - 1]),
        )
        self.u_closed, self.v_closed = u_closed, v_closed
        self._ctrl = P
        self._weights = w

    def derivs(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return bspline.surface_eval(self.U, self.p, self.V, self.q, self.Pw, u, v)


def _curve_bounds(curve: Curve, center: np.ndarray, half: float) -> Tuple[float, float]:
    lo, hi = curve.domain
    if math.isfinite(lo) and math.isfinite(hi):
        return lo, hi
    # unbounded (line): parameter range covering the model's bounding sphere
    tc = float(curve.invert(center[None, :])[0])
    speed = float(np.linalg.norm(curve.derivative(np.array([tc]))[0]))
    span = 2.0 * half / max(speed, 1e-300)
    return tc - span, tc + span


class ExtrusionSurface(_IterativeSurface):
    kind = PrimitiveType.EXTRUSION

    def __init__(self, curve: Curve, direction, magnitude: float, center, half_extent: float):
        self.curve = curve
        self.vector = _unit(np.asarray(direction, dtype=float)) * float(magnitude)
        self.period_u = curve.period
        u0, u1 = _curve_bounds(curve, np.asarray(center, float), half_extent)
        vc = float(np.dot(np.asarray(center, float) - curve.evaluate(np.array([u0]))[0], self.vector))
        vc /= float(np.dot(self.vector, self.vector))
        vspan = 2.0 * half_extent / np.linalg.norm(self.vector)
        self.domain = (u0, u1, vc - vspan, vc + vspan)

    def derivs(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        C = self.curve.evaluate(u)
        dC = self.curve.derivative(u)
        return C + np.multiply.outer(v, self.vector), dC, np.tile(self.vector, (u.shape[0], 1))


class RevolutionSurface(_IterativeSurface):
    kind = PrimitiveType.REVOLUTION
    period_u = TWO_PI

    def __init__(self, curve: Curve, origin, axis, center, half_extent: float):
        self.curve = curve
        self.origin = np.asarray(origin, dtype=float)
        self.axis = _unit(np.asarray(axis, dtype=float))
        self.period_v = curve.period
        v0, v1 = _curve_bounds(curve, np.asarray(center, float), half_extent)
        self.domain = (0.0, TWO_PI, v0, v1)

    def _rotate(self, vecs, u):
        a = self.axis
        c, s = np.cos(u)[:, None], np.sin(u)[:, None]
        return vecs * c + np.cross(a, vecs) * s + np.outer(vecs @ a, a) * (1.0 - c)

    def derivs(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        C = self.curve.evaluate(v) - self.origin
        dC = self.curve.derivative(v)
        Q = self._rotate(C, u)
        P = self.origin + Q
        Su = np.cross(self.axis, Q)
        Sv = self._rotate(dC, u)
        return P, Su, Sv


class UnsupportedSurface(SurfaceGeom):
    kind = PrimitiveType.OTHER

    def __init__(self, keyword: str):
        self.keyword = keyword

    def derivs(self, u, v):
        raise GeometryError(f"cannot evaluate unsupported surface {self.keyword}")

    def evaluate(self, u, v):
        raise GeometryError(f"cannot evaluate unsupported surface {self.keyword}")

    def invert(self, pts, tol=math.inf):
        raise GeometryError(f"cannot invert onto unsupported surface {self.keyword}")
