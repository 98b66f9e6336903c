"""Canonical frames and curvature operators of curves of Lagrangian subspaces.

The machinery works on any smooth curve of Lagrangian subspaces handed over
as a frame callback plus the bilinear form on it.  For a monotone system the
curve is the pullback of the vertical distribution along the flow and the
form is the pulled-back fiber metric, which is positive definite, so the
frame can be orthonormalized by a Cholesky-based Gram-Schmidt in fixed
coordinate order.  The skew matrix Omega(t) of pairings of frame derivatives
is then flattened away by the gauge ODE  dU/dt = U Omega / 2, after which
the frame together with its derivative is a Darboux basis at every time and
the curvature matrix is read off from the second derivative.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AccuracyError, RegularityError, StructuralError
from .numutil import (
    gram_schmidt_against,
    max_principal_angle,
    polar_orthogonalize,
    stencil_diff1,
    stencil_diff2,
    symmetrize,
)
from .phase import PhasePoint, Trajectory, IntegratorOptions, as_atlas

_STENCIL = (-2, -1, 0, 1, 2)


@dataclass(eq=False)
class LagrangianCurve:
    """A curve of Lagrangian subspaces in a fixed symplectic vector space.

    `frame_gram(t, ctx)` returns a (2m, m) basis matrix, smooth in t for a
    fixed chart context, together with the canonical form in that basis.
    Times in `switches()` are where the basis may jump by a linear change
    (the gauge machinery absorbs the jump).
    """

    omega: np.ndarray
    dim: int
    frame_gram: Callable
    switches: Callable[[], list]
    prepare: Callable[[float], None]
    label: str = "curve"


def padded_ensure(traj: Trajectory, pad: float = 1.0):
    """Coverage callback that integrates a little past each request.

    Extending the trajectory one stencil at a time would restart the solver
    for every jet; the pad amortizes that.  Truncated trajectories fall back
    to exact coverage.
    """

    def prepare(t: float) -> None:
        try:
            traj.ensure(t + math.copysign(pad, t) if t != 0.0 else pad)
        except Exception:
            traj.ensure(t)

    return prepare


def trajectory_curve(traj: Trajectory) -> LagrangianCurve:
    """The Jacobi curve t -> dphi_t^{-1}(vertical at phi_t) of a trajectory."""
    return LagrangianCurve(
        omega=traj.base_omega,
        dim=traj.base.n,
        frame_gram=lambda t, ctx: (traj.vertical_pulled(t, ctx), traj.gram(t, ctx)),
        switches=lambda: list(traj.switch_times),
        prepare=padded_ensure(traj),
        label="jacobi",
    )


@dataclass(eq=False)
class FrameJet:
    """Canonical frame data at one time: E, F = dE/dt, dF/dt and curvature."""

    t: float
    E: np.ndarray
    F: np.ndarray
    Fdot: np.ndarray
    curvature: np.ndarray
    asymmetry: float
    omega_small: np.ndarray
    omega_small_dot: np.ndarray
    ortho: np.ndarray
    coeff: np.ndarray
    gauge: np.ndarray
    darboux_residual: float


class CurveFrame:
    """Canonical frame machinery along one Lagrangian curve.

    Gauge values are cached at visited times; requests between cached nodes
    integrate the gauge ODE from the nearest node on the same side of zero,
    multiplying in the orthogonal basis jump whenever a chart switch time is
    crossed.  U is re-orthogonalized (polar projection) at each cached node.
    """

    def __init__(self, curve: LagrangianCurve, fd_step: float = 5e-3,
                 initial_gauge: Optional[np.ndarray] = None,
                 gauge_rtol: float = 1e-10):
        self.curve = curve
        self.h = fd_step
        self.m = curve.dim
        u0 = np.eye(self.m) if initial_gauge is None else np.asarray(initial_gauge, float)
        if np.max(np.abs(u0 @ u0.T - np.eye(self.m))) > 1e-9:
            raise StructuralError("initial gauge must be orthogonal")
        self._u0 = u0
        self._gauge_rtol = gauge_rtol
        self._nodes = {1: [0.0], -1: [0.0]}
        self._gauges = {1: [u0.copy()], -1: [u0.copy()]}
        self._jets = {}

    # -- frame primitives ------------------------------------------------------

    def ortho_frame(self, t: float, ctx: float | None = None):
        """Frame orthonormalized against the canonical form, with coefficients."""
        ctx = t if ctx is None else ctx
        w, g = self.curve.frame_gram(t, ctx)
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) < 1e-12:
            raise RegularityError(f"degenerate canonical form at t={t:.6g}", time=t)
        try:
            basis, coeff = gram_schmidt_against(w, g)
        except ValueError as exc:
            raise RegularityError(
                f"canonical form not positive definite at t={t:.6g}", time=t) from exc
        return basis, coeff

    def _ortho_stencil(self, t: float, ctx: float, half: int):
        return [self.ortho_frame(t + k * self.h, ctx)[0] for k in range(-half, half + 1)]

    def omega_small(self, t: float, ctx: float | None = None) -> np.ndarray:
        """Skew matrix of pairings of first derivatives of the orthonormal frame."""
        ctx = t if ctx is None else ctx
        sten = self._ortho_stencil(t, ctx, 2)
        de = stencil_diff1(sten, self.h)
        om = de.T @ self.curve.omega @ de
        return 0.5 * (om - om.T)

    # -- gauge transport -------------------------------------------------------

    def _switch_jump(self, tau: float) -> np.ndarray:
        """Orthogonal transition between frames on both sides of a switch."""
        eps = 3.0 * self.h
        left, _ = self.ortho_frame(tau, ctx=tau - eps)
        right, _ = self.ortho_frame(tau, ctx=tau + eps)
        o_t, *_ = np.linalg.lstsq(left, right, rcond=None)
        o = o_t.T
        if np.max(np.abs(o @ o.T - np.eye(self.m))) > 1e-6:
            raise AccuracyError(f"frame jump at t={tau:.6g} is not orthogonal")
        return polar_orthogonalize(o)

    def _integrate_gauge(self, u: np.ndarray, t0: float, t1: float) -> np.ndarray:
        if t0 == t1:
            return u
        def rhs(s, flat):
            mat = flat.reshape(self.m, self.m)
            return (0.5 * mat @ self.omega_small(s)).ravel()

        res = solve_ivp(rhs, (t0, t1), u.ravel(), method="DOP853",
                        rtol=self._gauge_rtol, atol=1e-13)
        if res.status != 0:
            raise AccuracyError(f"gauge transport failed on [{t0:.4g}, {t1:.4g}]")
        return res.y[:, -1].reshape(self.m, self.m)

    def gauge(self, t: float) -> np.ndarray:
        if self.m == 1:
            return self._u0.copy()
        side = 1 if t >= 0.0 else -1
        nodes, gauges = self._nodes[side], self._gauges[side]
        self.curve.prepare(t)
        idx = bisect.bisect_right([abs(x) for x in nodes], abs(t)) - 1
        t0, u = nodes[idx], gauges[idx]
        if t0 == t:
            return u.copy()
        jumps = sorted(
            (tau for tau in self.curve.switches()
             if min(t0, t) < tau < max(t0, t) or tau == t0 and False),
            reverse=(t < t0),
        )
        cur, ucur = t0, u.copy()
        for tau in jumps:
            ucur = self._integrate_gauge(ucur, cur, tau)
            jump = self._switch_jump(tau)
            # crossing forward conjugates into the new basis; backward undoes it
            ucur = ucur @ (jump.T if t > t0 else jump)
            cur = tau
        ucur = polar_orthogonalize(self._integrate_gauge(ucur, cur, t))
        if abs(t) > abs(nodes[-1]):
            nodes.append(t)
            gauges.append(ucur.copy())
        return ucur

    # -- jets -------------------------------------------------------------------

    def jet(self, t: float) -> FrameJet:
        key = round(float(t), 12)
        if key in self._jets:
            return self._jets[key]
        self.curve.prepare(t)
        h, om_amb = self.h, self.curve.omega
        sten = self._ortho_stencil(t, t, 4)
        de = [stencil_diff1(sten[k - 2:k + 3], h) for k in range(2, 7)]
        om_series = [0.5 * (d.T @ om_amb @ d - (d.T @ om_amb @ d).T) for d in de]
        e0 = sten[4]
        e_dot = de[2]
        e_ddot = stencil_diff2(sten[2:7], h)
        om0 = om_series[2]
        om_dot = stencil_diff1(om_series, h)
        u = self.gauge(t)
        ut = u.T
        e_mat = e0 @ ut
        f_mat = (e_dot - 0.5 * e0 @ om0) @ ut
        fdot_mat = (e_ddot - e_dot @ om0 - 0.5 * e0 @ om_dot
                    + 0.25 * e0 @ om0 @ om0) @ ut
        r_raw = fdot_mat.T @ om_amb @ f_mat
        r_sym, asym = symmetrize(r_raw)
        darboux = max(
            float(np.max(np.abs(e_mat.T @ om_amb @ e_mat))),
            float(np.max(np.abs(f_mat.T @ om_amb @ e_mat - np.eye(self.m)))),
            float(np.max(np.abs(f_mat.T @ om_amb @ f_mat))),
        )
        jet = FrameJet(t=float(t), E=e_mat, F=f_mat, Fdot=fdot_mat, curvature=r_sym,
                       asymmetry=asym, omega_small=om0, omega_small_dot=om_dot,
                       ortho=e0, coeff=None, gauge=u, darboux_residual=darboux)
        self._jets[key] = jet
        return jet

    def coefficients(self, t: float, vectors: np.ndarray):
        """Expansion of ambient vectors in the Darboux basis (E(t), F(t)).

        Returns (a, b) with w = E a + F b columnwise; the frame metric norm of
        w is then sqrt(|a|^2 + |b|^2).
        """
        j = self.jet(t)
        om = self.curve.omega
        vecs = np.atleast_2d(np.asarray(vectors, float).T).T
        a = j.F.T @ om @ vecs
        b = -j.E.T @ om @ vecs
        return a, b

    def curvature(self, t: float) -> np.ndarray:
        return self.jet(t).curvature


# -- spec-level types and operations -------------------------------------------


@dataclass(eq=False)
class JacobiCurveSample:
    """Grid snapshot of a Jacobi curve: frames and canonical-form matrices."""

    base: PhasePoint
    times: np.ndarray
    frames: np.ndarray
    gram: np.ndarray
    monotone: bool
    trajectory: Trajectory = None

    def curve(self) -> LagrangianCurve:
        return trajectory_curve(self.trajectory)


@dataclass(eq=False)
class CanonicalFrame:
    """Darboux frame family (E, F = dE/dt) of a Jacobi curve plus curvature."""

    times: np.ndarray
    E: np.ndarray
    F: np.ndarray
    curvature: np.ndarray
    frame_gauge: str
    darboux_residual: float
    asymmetry: float
    frame: CurveFrame = None


@dataclass(eq=False)
class Splitting:
    """Vertical/horizontal splitting at a point with projector matrices."""

    base: PhasePoint
    vertical: np.ndarray
    horizontal: np.ndarray
    projector_v: np.ndarray
    projector_h: np.ndarray


def jacobi_curve(obj, alpha: PhasePoint, grid, opts: IntegratorOptions | None = None,
                 trajectory: Trajectory | None = None) -> JacobiCurveSample:
    """Sample the pulled-back vertical distribution along the flow from alpha."""
    traj = trajectory or Trajectory(obj, alpha, opts)
    grid = np.asarray(grid, dtype=float)
    n = traj.base.n
    frames = np.empty((grid.size, 2 * n, n))
    grams = np.empty((grid.size, n, n))
    monotone = True
    for k, t in enumerate(grid):
        frames[k] = traj.vertical_pulled(t)
        grams[k] = traj.gram(t)
        det = np.linalg.det(grams[k])
        if abs(det) < 1e-12:
            raise RegularityError(f"canonical form degenerate at t={t:.6g}", time=t)
        if np.any(np.linalg.eigvalsh(grams[k]) <= 0.0):
            monotone = False
        iso = float(np.max(np.abs(frames[k].T @ traj.base_omega @ frames[k])))
        if iso > 1e-9 * max(1.0, float(np.max(np.abs(frames[k]))) ** 2):
            raise AccuracyError(f"Jacobi frame not isotropic at t={t:.6g}: {iso:.2e}")
    return JacobiCurveSample(base=traj.base, times=grid, frames=frames, gram=grams,
                             monotone=monotone, trajectory=traj)


def canonical_frame(sample: JacobiCurveSample, fd_step: float = 5e-3,
                    initial_gauge: Optional[np.ndarray] = None,
                    residual_tol: float = 1e-6) -> CanonicalFrame:
    """Canonical Darboux frame family along the sampled curve.

    The orthonormalization is Cholesky-based Gram-Schmidt in fixed coordinate
    order, giving a deterministic gauge; `initial_gauge` rotates it by a
    constant orthogonal matrix (the frame changes covariantly).
    """
    cf = CurveFrame(sample.curve(), fd_step=fd_step, initial_gauge=initial_gauge)
    n = sample.base.n
    k_count = sample.times.size
    e_arr = np.empty((k_count, 2 * n, n))
    f_arr = np.empty((k_count, 2 * n, n))
    r_arr = np.empty((k_count, n, n))
    worst_darboux = 0.0
    worst_asym = 0.0
    order = np.argsort(np.abs(sample.times), kind="stable")
    for k in order:
        jet = cf.jet(float(sample.times[k]))
        e_arr[k], f_arr[k], r_arr[k] = jet.E, jet.F, jet.curvature
        worst_darboux = max(worst_darboux, jet.darboux_residual)
        worst_asym = max(worst_asym, jet.asymmetry)
    if worst_darboux > residual_tol:
        raise AccuracyError(
            f"Darboux residual {worst_darboux:.3e} exceeds {residual_tol:.1e}; "
            "a finer grid or smaller fd step may help")
    gauge_id = "cholesky-coordinate-order" if initial_gauge is None else "rotated"
    return CanonicalFrame(times=sample.times, E=e_arr, F=f_arr, curvature=r_arr,
                          frame_gauge=gauge_id, darboux_residual=worst_darboux,
                          asymmetry=worst_asym, frame=cf)


def splitting(obj, alpha: PhasePoint, opts: IntegratorOptions | None = None,
              trajectory: Trajectory | None = None, fd_step: float = 5e-3,
              cond_limit: float = 1e8) -> Splitting:
    """Vertical/horizontal splitting from the canonical frame at time zero."""
    traj = trajectory or Trajectory(obj, alpha, opts)
    cf = CurveFrame(trajectory_curve(traj), fd_step=fd_step)
    jet = cf.jet(0.0)
    e0, f0 = jet.E, jet.F
    full = np.hstack([e0, f0])
    if np.linalg.cond(full) > cond_limit:
        raise StructuralError("vertical/horizontal sum is numerically degenerate")
    om = traj.base_omega
    p_v = e0 @ f0.T @ om
    p_h = -f0 @ e0.T @ om
    eye = np.eye(om.shape[0])
    for p in (p_v, p_h):
        if np.max(np.abs(p @ p - p)) > 1e-9:
            raise AccuracyError("splitting projector failed idempotency")
    if np.max(np.abs(p_v + p_h - eye)) > 1e-9:
        raise AccuracyError("splitting projectors do not sum to identity")
    return Splitting(base=traj.base, vertical=e0, horizontal=f0,
                     projector_v=p_v, projector_h=p_h)


def curvature_operator(obj, alpha: PhasePoint, method: str = "frame",
                       opts: IntegratorOptions | None = None,
                       trajectory: Trajectory | None = None,
                       fd_step: float = 5e-3, bracket_step: float = 1e-2,
                       asym_tol: float = 1e-5):
    """Curvature matrix at alpha in the canonical frame basis at time zero.

    method="frame" reads it from the structural equations of the canonical
    frame; method="bracket" evaluates the double Lie bracket with the
    horizontal/vertical projections, differentiating the pulled-back field
    along the flow.  Both return (matrix, frame jet at zero).
    """
    traj = trajectory or Trajectory(obj, alpha, opts)
    cf = CurveFrame(trajectory_curve(traj), fd_step=fd_step)
    jet0 = cf.jet(0.0)
    if method == "frame":
        if jet0.asymmetry > asym_tol:
            raise AccuracyError(f"curvature asymmetry {jet0.asymmetry:.2e}")
        return jet0.curvature, jet0
    if method != "bracket":
        raise ValueError(f"unknown curvature method {method!r}")
    e0, f0 = jet0.E, jet0.F
    n = traj.base.n
    h = bracket_step
    pulled = []
    for k in _STENCIL:
        s = k * h
        z, chart, mono, mono_inv = traj._eval(s, ctx=0.0) if s != 0.0 else (
            traj.base.coords, traj.base.chart, np.eye(2 * n), np.eye(2 * n))
        sys = traj.atlas.system(chart)
        dx = sys.vector_field_jacobian(z)
        # the first bracket with the coordinate-constant extension of e_i
        brack = -dx @ e0
        if s == 0.0:
            split = splitting(obj, alpha, trajectory=traj, fd_step=fd_step)
        else:
            beta = PhasePoint(coords=z, energy=sys.energy(z), chart=chart)
            split = splitting(obj, beta, opts=traj.opts, fd_step=fd_step)
        pulled.append(mono_inv @ (split.projector_h @ brack))
    lie = stencil_diff1(pulled, h)
    nmat = -lie
    r_bracket = (f0.T @ traj.base_omega @ nmat).T
    r_sym, asym = symmetrize(r_bracket)
    if asym > max(asym_tol, 1e-4):
        raise AccuracyError(f"bracket curvature asymmetry {asym:.2e}")
    return r_sym, jet0


def equivariance_check(obj, alpha: PhasePoint, s: float, t: float,
                       opts: IntegratorOptions | None = None,
                       fd_step: float = 5e-3) -> dict:
    """Residuals of flow equivariance of the Jacobi curve and its curvature.

    Compares the pushforward of the curve at alpha with a freshly integrated
    curve at the flowed point (subspace principal angle), and the curvature
    matrix at time t against the conjugated curvature of the flowed point.
    """
    traj = Trajectory(obj, alpha, opts)
    w_t = traj.vertical_pulled(t)
    pushed = traj.monodromy(s) @ w_t
    beta = traj.point_at(s)
    traj2 = Trajectory(obj, beta, opts)
    w2 = traj2.vertical_pulled(t - s)
    angle = max_principal_angle(pushed, w2)

    cf1 = CurveFrame(trajectory_curve(traj), fd_step=fd_step)
    jet1 = cf1.jet(t)
    gamma = traj.point_at(t)
    traj3 = Trajectory(obj, gamma, opts)
    cf3 = CurveFrame(trajectory_curve(traj3), fd_step=fd_step)
    jet3 = cf3.jet(0.0)
    pushed_frame = traj.monodromy(t) @ jet1.E
    o_t, *_ = np.linalg.lstsq(pushed_frame, jet3.E, rcond=None)
    o = polar_orthogonalize(o_t.T)
    curv_residual = float(np.max(np.abs(o.T @ jet3.curvature @ o - jet1.curvature)))
    return {
        "subspace_angle": float(angle),
        "curvature_residual": curv_residual,
        "gauge_orthogonality": float(np.max(np.abs(o_t.T @ o_t - np.eye(traj.base.n)))),
    }
