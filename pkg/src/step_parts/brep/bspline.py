"""Vectorised B-spline basis evaluation (Cox-de Boor with first derivatives)."""
from __future__ import annotations

import numpy as np


def expand_knots(knots, mults) -> np.ndarray:
    return np.repeat(np.asarray(knots, dtype=float), np.asarray(mults, dtype=int))


def find_span(U: np.ndarray, p: int, n_ctrl: int, t: np.ndarray) -> np.ndarray:
    span = np.searchsorted(U, t, side="right") - 1
    return np.clip(span, p, n_ctrl - 1)


def basis(U: np.ndarray, p: int, span: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Non-zero basis functions ``N[span-p+j, p](t)`` for ``j = 0..p``; shape (m, p+1)."""
    m = t.shape[0]
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - U[span + 1 - j]
        right[:, j] = U[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            with np.errstate(divide="ignore", invalid="ignore"):
                temp = np.where(denom != 0.0, N[:, r] / denom, 0.0)
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def basis_ders(U: np.ndarray, p: int, span: np.ndarray, t: np.ndarray):
    """Basis values and first derivatives, each of shape (m, p+1)."""
    N = basis(U, p, span, t)
    dN = np.zeros_like(N)
    if p == 0:
        return N, dN
    Nm = basis(U, p - 1, span, t)  # N[span-p+1+j, p-1], j = 0..p-1
    for j in range(p + 1):
        i = span - p + j
        acc = np.zeros(t.shape[0])
        if j >= 1:
            d = U[i + p] - U[i]
            with np.errstate(divide="ignore", invalid="ignore"):
                acc += np.where(d != 0.0, Nm[:, j - 1] / d, 0.0)
        if j <= p - 1:
            d = U[i + p + 1] - U[i + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                acc -= np.where(d != 0.0, Nm[:, j] / d, 0.0)
        dN[:, j] = p * acc
    return N, dN


def curve_eval(U, p, Pw, t, derivative: bool = True):
    """Point and tangent of a (possibly rational) curve; ``Pw`` is homogeneous (n, 4)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    span = find_span(U, p, Pw.shape[0], t)
    N, dN = basis_ders(U, p, span, t)
    idx = span[:, None] - p + np.arange(p + 1)[None, :]
    ctrl = Pw[idx]  # (m, p+1, 4)
    Cw = np.einsum("mj,mjk->mk", N, ctrl)
    w = Cw[:, 3:4]
    C = Cw[:, :3] / w
    if not derivative:
        return C, None
    dCw = np.einsum("mj,mjk->mk", dN, ctrl)
    dC = (dCw[:, :3] - dCw[:, 3:4] * C) / w
    return C, dC


def surface_eval(U, p, V, q, Pw, u, v):
    """Point and first partials of a (possibly rational) surface; ``Pw`` is (nu, nv, 4)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    su = find_span(U, p, Pw.shape[0], u)
    sv = find_span(V, q, Pw.shape[1], v)
    Nu, dNu = basis_ders(U, p, su, u)
    Nv, dNv = basis_ders(V, q, sv, v)
    iu = su[:, None] - p + np.arange(p + 1)[None, :]
    iv = sv[:, None] - q + np.arange(q + 1)[None, :]
    ctrl = Pw[iu[:, :, None], iv[:, None, :]]  # (m, p+1, q+1, 4)
    Sw = np.einsum("ma,mb,mabk->mk", Nu, Nv, ctrl)
    Suw = np.einsum("ma,mb,mabk->mk", dNu, Nv, ctrl)
    Svw = np.einsum("ma,mb,mabk->mk", Nu, dNv, ctrl)
    w = Sw[:, 3:4]
    S = Sw[:, :3] / w
    Su = (Suw[:, :3] - Suw[:, 3:4] * S) / w
    Sv = (Svw[:, :3] - Svw[:, 3:4] * S) / w
    return S, Su, Sv
