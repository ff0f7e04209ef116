"""Hot loops with a numba backend and a pure numpy/scipy fallback.

Set ``STEP_PARTS_NUMBA=0`` to force the fallback. Both backends return identical
results: ties in nearest queries always resolve to the smaller index.
"""
from __future__ import annotations

import logging
import os

import numpy as np
from scipy.spatial import cKDTree

LOGGER = logging.getLogger(__name__)


def _numba_requested() -> bool:
    return os.environ.get("STEP_PARTS_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


try:  # pragma: no cover - exercised implicitly
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _nb = None
    HAVE_NUMBA = False


def backend() -> str:
    return "numba" if HAVE_NUMBA and _numba_requested() else "numpy"


# ---------------------------------------------------------------- numpy reference


def _closest_sq_dist_np(q: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared distance from points to triangles, row-wise (closest-point region test)."""
    ab = b - a
    ac = c - a
    ap = q - a
    d1 = np.sum(ab * ap, axis=1)
    d2 = np.sum(ac * ap, axis=1)
    bp = q - b
    d3 = np.sum(ab * bp, axis=1)
    d4 = np.sum(ac * bp, axis=1)
    cp = q - c
    d5 = np.sum(ab * cp, axis=1)
    d6 = np.sum(ac * cp, axis=1)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    out = np.empty_like(q)
    done = np.zeros(q.shape[0], dtype=bool)

    def put(mask, pts):
        m = mask & ~done
        out[m] = pts[m]
        done[m] = True

    put((d1 <= 0) & (d2 <= 0), a)
    put((d3 >= 0) & (d4 <= d3), b)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = d1 / (d1 - d3)
        put((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v[:, None] * ab)
        put((d6 >= 0) & (d5 <= d6), c)
        w = d2 / (d2 - d6)
        put((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w[:, None] * ac)
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        put((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), b + w[:, None] * (c - b))
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        put(np.ones_like(done), a + ab * v[:, None] + ac * w[:, None])
    d = q - out
    return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]


def _nearest_vertex_np(points: np.ndarray, verts: np.ndarray, chunk: int = 2048) -> np.ndarray:
    out = np.empty(points.shape[0], dtype=np.int64)
    for s in range(0, points.shape[0], chunk):
        q = points[s:s + chunk]
        dx = q[:, None, 0] - verts[None, :, 0]
        dy = q[:, None, 1] - verts[None, :, 1]
        dz = q[:, None, 2] - verts[None, :, 2]
        out[s:s + chunk] = np.argmin(dx * dx + dy * dy + dz * dz, axis=1)
    return out


def _nearest_triangle_np(points: np.ndarray, verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    A, B, C = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    cent = (A + B + C) / 3.0
    radius = np.sqrt(np.max(np.stack([
        np.sum((A - cent) ** 2, axis=1), np.sum((B - cent) ** 2, axis=1), np.sum((C - cent) ** 2, axis=1),
    ]), axis=0))
    rmax = float(radius.max())
    tree = cKDTree(cent)
    _, first = tree.query(points, k=1)
    upper = np.sqrt(_closest_sq_dist_np(points, A[first], B[first], C[first]))
    # every triangle within distance d of q has its centroid within d + rmax of q
    cands = tree.query_ball_point(points, upper * (1 + 1e-9) + 1e-12 + rmax)
    lens = np.fromiter((len(c) for c in cands), dtype=np.int64, count=len(cands))
    qi = np.repeat(np.arange(points.shape[0]), lens)
    ti = np.fromiter((t for c in cands for t in c), dtype=np.int64, count=int(lens.sum()))
    d2 = _closest_sq_dist_np(points[qi], A[ti], B[ti], C[ti])
    order = np.lexsort((ti, d2, qi))
    qs = qi[order]
    firsts = np.ones(qs.shape[0], dtype=bool)
    firsts[1:] = qs[1:] != qs[:-1]
    out = np.empty(points.shape[0], dtype=np.int64)
    out[qs[firsts]] = ti[order][firsts]
    return out


def _confusion_np(ref: np.ndarray, cand: np.ndarray, nr: int, nc: int) -> np.ndarray:
    flat = np.bincount(ref.astype(np.int64) * nc + cand.astype(np.int64), minlength=nr * nc)
    return flat.reshape(nr, nc)


def _barycentric_np(verts, tris, tri_idx, r1, r2) -> np.ndarray:
    s = np.sqrt(r1)
    a = verts[tris[tri_idx, 0]]
    b = verts[tris[tri_idx, 1]]
    c = verts[tris[tri_idx, 2]]
    return (1.0 - s)[:, None] * a + (s * (1.0 - r2))[:, None] * b + (s * r2)[:, None] * c


# ---------------------------------------------------------------- numba kernels

if HAVE_NUMBA:
    njit = _nb.njit(cache=True, nogil=True)

    @njit
    def _grid_dims(lo, hi, n_items, per_cell):
        ext = hi - lo
        top = max(ext.max(), 1e-300)
        # flat or linear clouds: treat thin axes as one max-resolution cell thick
        ext = np.maximum(ext, top / 256.0)
        cells = max(1.0, n_items / per_cell)
        h = (ext[0] * ext[1] * ext[2] / cells) ** (1.0 / 3.0)
        h = max(h, top / 256.0)
        dims = np.empty(3, np.int64)
        for k in range(3):
            dims[k] = max(1, min(256, int(np.ceil(ext[k] / h))))
        return h, dims

    @njit
    def _cell_of(p, lo, h, dims):
        c = np.empty(3, np.int64)
        for k in range(3):
            i = int(np.floor((p[k] - lo[k]) / h))
            c[k] = min(max(i, 0), dims[k] - 1)
        return c

    @njit
    def _ring_cells(c, r, dims):
        """In-range cell ids at Chebyshev distance exactly ``r`` from ``c``."""
        x0, x1 = max(c[0] - r, 0), min(c[0] + r, dims[0] - 1)
        y0, y1 = max(c[1] - r, 0), min(c[1] + r, dims[1] - 1)
        z0, z1 = max(c[2] - r, 0), min(c[2] + r, dims[2] - 1)
        out = np.empty(max(0, (x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1)), np.int64)
        n = 0
        for x in range(x0, x1 + 1):
            ex = abs(x - c[0]) == r
            for y in range(y0, y1 + 1):
                if ex or abs(y - c[1]) == r:
                    for z in range(z0, z1 + 1):
                        out[n] = (x * dims[1] + y) * dims[2] + z
                        n += 1
                else:
                    for z in (c[2] - r, c[2] + r):
                        if z0 <= z <= z1 and (r > 0 or n == 0):
                            out[n] = (x * dims[1] + y) * dims[2] + z
                            n += 1
        return out[:n]

    @njit
    def _unvisited_bound(q, c, r, lo, h, dims):
        """Lower bound on the distance from ``q`` to cells beyond ring ``r``; -1 when none remain."""
        bound = np.inf
        for k in range(3):
            if c[k] + r + 1 <= dims[k] - 1:
                bound = min(bound, lo[k] + (c[k] + r + 1) * h - q[k])
            if c[k] - r - 1 >= 0:
                bound = min(bound, q[k] - (lo[k] + (c[k] - r) * h))
        if bound == np.inf:
            return -1.0
        return max(0.0, bound - 1e-9 * h)

    @njit
    def _nearest_vertex_nb(points, verts):
        n = verts.shape[0]
        lo = np.empty(3)
        hi = np.empty(3)
        for k in range(3):
            lo[k] = verts[:, k].min()
            hi[k] = verts[:, k].max()
        h, dims = _grid_dims(lo, hi, n, 2.0)
        ncell = dims[0] * dims[1] * dims[2]
        cell = np.empty(n, np.int64)
        for i in range(n):
            c = _cell_of(verts[i], lo, h, dims)
            cell[i] = (c[0] * dims[1] + c[1]) * dims[2] + c[2]
        order = np.argsort(cell, kind="mergesort")
        start = np.zeros(ncell + 1, np.int64)
        for i in range(n):
            start[cell[i] + 1] += 1
        for i in range(ncell):
            start[i + 1] += start[i]
        maxdim = max(dims[0], max(dims[1], dims[2]))
        out = np.empty(points.shape[0], np.int64)
        for qi in range(points.shape[0]):
            q = points[qi]
            c = _cell_of(q, lo, h, dims)
            best = np.inf
            besti = -1
            for r in range(maxdim + 1):
                for cid in _ring_cells(c, r, dims):
                    for s in range(start[cid], start[cid + 1]):
                        j = order[s]
                        ex = q[0] - verts[j, 0]
                        ey = q[1] - verts[j, 1]
                        ez = q[2] - verts[j, 2]
                        d = ex * ex + ey * ey + ez * ez
                        if d < best or (d == best and j < besti):
                            best = d
                            besti = j
                bound = _unvisited_bound(q, c, r, lo, h, dims)
                if bound < 0 or (besti >= 0 and best < bound * bound):
                    break
            out[qi] = besti
        return out

    @njit
    def _dot(a0, a1, a2, b0, b1, b2):
        return a0 * b0 + a1 * b1 + a2 * b2

    @njit
    def _closest_sq_dist_nb(q, a, b, c):
        ab0, ab1, ab2 = b[0] - a[0], b[1] - a[1], b[2] - a[2]
        ac0, ac1, ac2 = c[0] - a[0], c[1] - a[1], c[2] - a[2]
        ap0, ap1, ap2 = q[0] - a[0], q[1] - a[1], q[2] - a[2]
        d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
        d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
        bp0, bp1, bp2 = q[0] - b[0], q[1] - b[1], q[2] - b[2]
        d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
        d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
        cp0, cp1, cp2 = q[0] - c[0], q[1] - c[1], q[2] - c[2]
        d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
        d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if d1 <= 0 and d2 <= 0:
            x0, x1, x2 = a[0], a[1], a[2]
        elif d3 >= 0 and d4 <= d3:
            x0, x1, x2 = b[0], b[1], b[2]
        elif vc <= 0 and d1 >= 0 and d3 <= 0:
            v = d1 / (d1 - d3)
            x0, x1, x2 = a[0] + v * ab0, a[1] + v * ab1, a[2] + v * ab2
        elif d6 >= 0 and d5 <= d6:
            x0, x1, x2 = c[0], c[1], c[2]
        elif vb <= 0 and d2 >= 0 and d6 <= 0:
            w = d2 / (d2 - d6)
            x0, x1, x2 = a[0] + w * ac0, a[1] + w * ac1, a[2] + w * ac2
        elif va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            x0 = b[0] + w * (c[0] - b[0])
            x1 = b[1] + w * (c[1] - b[1])
            x2 = b[2] + w * (c[2] - b[2])
        else:
            denom = 1.0 / (va + vb + vc)
            v = vb * denom
            w = vc * denom
            x0 = a[0] + ab0 * v + ac0 * w
            x1 = a[1] + ab1 * v + ac1 * w
            x2 = a[2] + ab2 * v + ac2 * w
        e0, e1, e2 = q[0] - x0, q[1] - x1, q[2] - x2
        return e0 * e0 + e1 * e1 + e2 * e2

    @njit
    def _nearest_triangle_nb(points, verts, tris):
        m = tris.shape[0]
        tlo = np.empty((m, 3))
        thi = np.empty((m, 3))
        for t in range(m):
            for k in range(3):
                x = verts[tris[t, 0], k]
                y = verts[tris[t, 1], k]
                z = verts[tris[t, 2], k]
                tlo[t, k] = min(x, min(y, z))
                thi[t, k] = max(x, max(y, z))
        lo = np.empty(3)
        hi = np.empty(3)
        for k in range(3):
            lo[k] = tlo[:, k].min()
            hi[k] = thi[:, k].max()
        h, dims = _grid_dims(lo, hi, m, 1.0)
        ncell = dims[0] * dims[1] * dims[2]
        counts = np.zeros(ncell + 1, np.int64)
        for t in range(m):
            c0 = _cell_of(tlo[t], lo, h, dims)
            c1 = _cell_of(thi[t], lo, h, dims)
            for x in range(c0[0], c1[0] + 1):
                for y in range(c0[1], c1[1] + 1):
                    for z in range(c0[2], c1[2] + 1):
                        counts[(x * dims[1] + y) * dims[2] + z + 1] += 1
        for i in range(ncell):
            counts[i + 1] += counts[i]
        fill = counts[:-1].copy()
        items = np.empty(counts[ncell], np.int64)
        for t in range(m):
            c0 = _cell_of(tlo[t], lo, h, dims)
            c1 = _cell_of(thi[t], lo, h, dims)
            for x in range(c0[0], c1[0] + 1):
                for y in range(c0[1], c1[1] + 1):
                    for z in range(c0[2], c1[2] + 1):
                        cid = (x * dims[1] + y) * dims[2] + z
                        items[fill[cid]] = t
                        fill[cid] += 1
        stamp = np.full(m, -1, np.int64)
        maxdim = max(dims[0], max(dims[1], dims[2]))
        out = np.empty(points.shape[0], np.int64)
        for qi in range(points.shape[0]):
            q = points[qi]
            c = _cell_of(q, lo, h, dims)
            best = np.inf
            besti = -1
            for r in range(maxdim + 1):
                for cid in _ring_cells(c, r, dims):
                    for s in range(counts[cid], counts[cid + 1]):
                        t = items[s]
                        if stamp[t] == qi:
                            continue
                        stamp[t] = qi
                        d = _closest_sq_dist_nb(q, verts[tris[t, 0]], verts[tris[t, 1]], verts[tris[t, 2]])
                        if d < best or (d == best and t < besti):
                            best = d
                            besti = t
                bound = _unvisited_bound(q, c, r, lo, h, dims)
                if bound < 0 or (besti >= 0 and best < bound * bound):
                    break
            out[qi] = besti
        return out

    @njit
    def _confusion_nb(ref, cand, nr, nc):
        out = np.zeros((nr, nc), np.int64)
        for i in range(ref.shape[0]):
            out[ref[i], cand[i]] += 1
        return out

    @njit
    def _barycentric_nb(verts, tris, tri_idx, r1, r2):
        out = np.empty((tri_idx.shape[0], 3))
        for i in range(tri_idx.shape[0]):
            s = np.sqrt(r1[i])
            wa = 1.0 - s
            wb = s * (1.0 - r2[i])
            wc = s * r2[i]
            t = tri_idx[i]
            for k in range(3):
                out[i, k] = wa * verts[tris[t, 0], k] + wb * verts[tris[t, 1], k] + wc * verts[tris[t, 2], k]
        return out


# ---------------------------------------------------------------- dispatch


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def nearest_vertex(points, verts, use_numba: bool | None = None) -> np.ndarray:
    """Index of the nearest vertex for each point (ties -> smaller index)."""
    points, verts = _f64(points).reshape(-1, 3), _f64(verts).reshape(-1, 3)
    if verts.shape[0] == 0:
        raise ValueError("nearest_vertex: empty target")
    if points.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if use_numba if use_numba is not None else backend() == "numba":
        return _nearest_vertex_nb(points, verts)
    return _nearest_vertex_np(points, verts)


def nearest_triangle(points, verts, tris, use_numba: bool | None = None) -> np.ndarray:
    """Index of the triangle closest to each point (ties -> smaller index)."""
    points, verts, tris = _f64(points).reshape(-1, 3), _f64(verts).reshape(-1, 3), _i64(tris).reshape(-1, 3)
    if tris.shape[0] == 0:
        raise ValueError("nearest_triangle: empty target")
    if points.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if use_numba if use_numba is not None else backend() == "numba":
        return _nearest_triangle_nb(points, verts, tris)
    return _nearest_triangle_np(points, verts, tris)


def point_triangle_sq_dist(points, a, b, c) -> np.ndarray:
    return _closest_sq_dist_np(_f64(points), _f64(a), _f64(b), _f64(c))


def confusion_matrix(ref, cand, nr: int, nc: int, use_numba: bool | None = None) -> np.ndarray:
    ref, cand = _i64(ref), _i64(cand)
    if use_numba if use_numba is not None else backend() == "numba":
        return _confusion_nb(ref, cand, int(nr), int(nc))
    return _confusion_np(ref, cand, int(nr), int(nc))


def barycentric_points(verts, tris, tri_idx, r1, r2, use_numba: bool | None = None) -> np.ndarray:
    args = (_f64(verts), _i64(tris), _i64(tri_idx), _f64(r1), _f64(r2))
    if use_numba if use_numba is not None else backend() == "numba":
        return _barycentric_nb(*args)
    return _barycentric_np(*args)


__all__ = [
    "HAVE_NUMBA",
    "backend",
    "barycentric_points",
    "confusion_matrix",
    "nearest_triangle",
    "nearest_vertex",
    "point_triangle_sq_dist",
]
