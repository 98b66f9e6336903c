"""Small numerical helpers: finite-difference stencils, subspace geometry, sums."""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg

EPS = np.finfo(float).eps

# 4th-order central stencils on a uniform grid, offsets -2..2.
_D1_WEIGHTS = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_WEIGHTS = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def fd_step(x: float) -> float:
    """Step for 4th-order differencing of scalar fields, h = eps^(1/3)*max(1,|x|)."""
    return EPS ** (1.0 / 3.0) * max(1.0, abs(x))


def central_diff1(f, t: float, h: float):
    """4th-order first derivative of an array-valued function."""
    vals = [np.asarray(f(t + k * h), dtype=float) for k in (-2, -1, 0, 1, 2)]
    return sum(w * v for w, v in zip(_D1_WEIGHTS, vals)) / h


def stencil_diff1(values, h: float):
    """First derivative at the center of a 5-sample uniform stencil (offsets -2..2)."""
    values = np.asarray(values, dtype=float)
    return np.tensordot(_D1_WEIGHTS, values, axes=(0, 0)) / h


def stencil_diff2(values, h: float):
    """Second derivative at the center of a 5-sample uniform stencil."""
    values = np.asarray(values, dtype=float)
    return np.tensordot(_D2_WEIGHTS, values, axes=(0, 0)) / (h * h)


def grad_fd(f, x, rel_step: float | None = None):
    """4th-order central-difference gradient of a scalar field on R^d."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step if rel_step is not None else fd_step(x[i])
        vals = []
        for k in (-2, -1, 1, 2):
            xs = x.copy()
            xs[i] += k * h
            vals.append(f(xs))
        g[i] = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h)
    return g


def jacobian_fd(f, x, rel_step: float | None = None):
    """4th-order central-difference Jacobian of a vector field on R^d."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = rel_step if rel_step is not None else fd_step(x[i])
        vals = []
        for k in (-2, -1, 1, 2):
            xs = x.copy()
            xs[i] += k * h
            vals.append(np.asarray(f(xs), dtype=float))
        jac[:, i] = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h)
    return jac


def symmetrize(a):
    """Return (sym(a), max-asymmetry) pair."""
    a = np.asarray(a, dtype=float)
    sym = 0.5 * (a + a.T)
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    return sym, asym


def polar_orthogonalize(u):
    """Nearest orthogonal matrix (polar factor) of u."""
    w, _, vt = np.linalg.svd(u)
    return w @ vt


def orthonormal_columns(a, rtol: float = 1e-12):
    """Orthonormal basis of the column span (SVD-based, rank-revealing)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0:
        return u[:, :0]
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


def principal_angles(a, b):
    """Principal angles (radians, descending) between the column spans of a and b."""
    qa = orthonormal_columns(a)
    qb = orthonormal_columns(b)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros(0)
    return linalg.subspace_angles(qa, qb)


def max_principal_angle(a, b) -> float:
    ang = principal_angles(a, b)
    return float(ang[0]) if ang.size else 0.0


def min_principal_angle(a, b) -> float:
    ang = principal_angles(a, b)
    return float(ang[-1]) if ang.size else math.pi / 2.0


def null_space_of_rows(rows, rcond: float = 1e-12):
    """Orthonormal basis of the kernel of a (k, d) row matrix."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return linalg.null_space(rows, rcond=rcond)


def gram_schmidt_against(basis, gram):
    """Coefficient matrix a (upper triangular) with a.T @ gram @ a = I.

    Orthonormalizes the columns of `basis` in their given order against the
    positive-definite form `gram` expressed in that basis; returns the pair
    (basis @ a, a).
    """
    gram = np.asarray(gram, dtype=float)
    try:
        low = np.linalg.cholesky(0.5 * (gram + gram.T))
    except np.linalg.LinAlgError as exc:
        raise ValueError("form is not positive definite") from exc
    a = linalg.solve_triangular(low.T, np.eye(gram.shape[0]))
    return np.asarray(basis, dtype=float) @ a, a


def fsum(values) -> float:
    """Order-robust compensated sum."""
    return math.fsum(float(v) for v in values)


def weighted_linear_fit(ts, ys):
    """Ordinary least-squares line fit; returns (slope, intercept)."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    a = np.vstack([ts, np.ones_like(ts)]).T
    sol, *_ = np.linalg.lstsq(a, ys, rcond=None)
    return float(sol[0]), float(sol[1])
