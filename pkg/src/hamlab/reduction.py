"""Symplectic reduction by the flow direction and the reduced curvature.

The quotient of the energy-shell tangent space by the flow direction is
realized at the base point once: an orthonormal basis Q of the complement of
span{grad H, X} gives coordinates on the quotient, the restriction of the
symplectic matrix descends, and the reduced Jacobi curve lives entirely in
that fixed space because the curve of subspaces is intersected with the
kernel of dH at the base.  The intersection basis is produced by a closed
smooth formula in the two-degree-of-freedom case and by an anchored rotation
construction otherwise, so the reduced frames stay differentiable in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StructuralError, TransversalityError
from .jacobi import CurveFrame, LagrangianCurve
from .numutil import polar_orthogonalize, stencil_diff1, stencil_diff2, symmetrize
from .phase import IntegratorOptions, PhasePoint, Trajectory, as_atlas

_ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(eq=False)
class ReducedSpace:
    """Coordinates on the quotient of the energy shell by the flow direction."""

    base: PhasePoint
    representative_basis: np.ndarray
    reduced_omega: np.ndarray
    hvec: np.ndarray
    grad: np.ndarray
    trivial: bool = False

    @property
    def dim(self) -> int:
        return self.representative_basis.shape[1]

    def lift(self, coeffs) -> np.ndarray:
        return self.representative_basis @ np.asarray(coeffs, dtype=float)

    def project(self, vectors) -> np.ndarray:
        return self.representative_basis.T @ np.asarray(vectors, dtype=float)


@dataclass(eq=False)
class ReducedFrame:
    """Canonical frame data of the reduced Jacobi curve on a grid."""

    times: np.ndarray
    E: np.ndarray
    F: np.ndarray
    reduced_curvature: np.ndarray
    darboux_residual: float
    omega_bar: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    frame: CurveFrame = None
    trivial: bool = False


def reduce_space(obj, alpha: PhasePoint, grad_floor: float = 1e-12) -> ReducedSpace:
    """Quotient coordinates at alpha; errors on critical points and tangency."""
    atlas = as_atlas(obj)
    sys = atlas.system(alpha.chart)
    z = alpha.coords
    grad = sys.grad_at(z)
    if np.linalg.norm(grad) < grad_floor:
        raise TransversalityError(f"critical point of the Hamiltonian at {z}")
    hvec = sys.vector_field(z)
    vert = sys.vertical_at(z)
    # the flow direction must be transversal to the vertical space
    sol, res, *_ = np.linalg.lstsq(vert, hvec, rcond=None)
    rem = hvec - vert @ sol
    if np.linalg.norm(rem) < 1e-10 * max(1.0, np.linalg.norm(hvec)):
        raise TransversalityError("flow direction tangent to the vertical space")
    n = alpha.n
    if n == 1:
        return ReducedSpace(base=alpha, representative_basis=np.zeros((2, 0)),
                            reduced_omega=np.zeros((0, 0)), hvec=hvec, grad=grad,
                            trivial=True)
    span = np.stack([grad, hvec])
    q, _ = np.linalg.qr(span.T)
    full_q, _ = np.linalg.qr(np.hstack([q, np.eye(2 * n)]))
    basis = full_q[:, 2:2 * n]
    om = sys.omega_matrix(z)
    rom = basis.T @ om @ basis
    if abs(np.linalg.det(rom)) < 1e-12:
        raise StructuralError("reduced symplectic form is degenerate")
    return ReducedSpace(base=alpha, representative_basis=basis, reduced_omega=rom,
                        hvec=hvec, grad=grad)


class _SmoothKernel:
    """Smooth-in-time basis of the kernel of the row t -> grad^T W(t).

    In two degrees of freedom a quarter rotation of the row is global and
    exact; in higher dimension the kernel frame is carried by the direct
    rotation from a moving anchor, re-anchored whenever the row drifts too
    far (each re-anchor is an orthogonal frame jump registered with the
    gauge machinery through `extra_switches`).
    """

    def __init__(self, row_fn: Callable[[float, float], np.ndarray], n: int):
        self.row_fn = row_fn
        self.n = n
        self.extra_switches: list = []
        self._anchors: list = []

    def rho(self, t: float, ctx: float) -> np.ndarray:
        return self._unit(self.row_fn(t, ctx), t)

    def _unit(self, row: np.ndarray, t: float) -> np.ndarray:
        nrm = np.linalg.norm(row)
        if nrm < 1e-13:
            raise TransversalityError(f"vertical space tangent to the shell at t={t:.4g}")
        return row / nrm

    def basis_from_row(self, row: np.ndarray, t: float, ctx: float) -> np.ndarray:
        rho = self._unit(row, t)
        if self.n == 2:
            return (_ROT90 @ rho).reshape(2, 1)
        return self._rotated_basis(rho, t, ctx)

    def basis(self, t: float, ctx: float) -> np.ndarray:
        rho = self.rho(t, ctx)
        if self.n == 2:
            return (_ROT90 @ rho).reshape(2, 1)
        return self._rotated_basis(rho, t, ctx)

    def _rotated_basis(self, rho: np.ndarray, t: float, ctx: float) -> np.ndarray:
        _, anchor_rho, anchor_basis = self._anchor_for(t, ctx)
        dot = float(anchor_rho @ rho)
        if dot <= 0.2:
            raise StructuralError("kernel anchor invalidated; widen the anchor grid")
        v = anchor_rho + rho
        refl = np.eye(self.n) - 2.0 * np.outer(v, v) / float(v @ v)
        rot = -refl @ (np.eye(self.n) - 2.0 * np.outer(anchor_rho, anchor_rho))
        return rot @ anchor_basis

    def _anchor_for(self, t: float, ctx: float):
        if not self._anchors:
            rho0 = self.rho(0.0, 0.0)
            self._anchors.append((0.0, rho0, _complement(rho0)))
        best = min(self._anchors, key=lambda a: abs(a[0] - t))
        if float(best[1] @ self.rho(t, ctx)) > 0.5:
            return best
        # re-anchor halfway between the best anchor and t
        lo, hi = (best[0], t) if best[0] <= t else (t, best[0])
        mid = 0.5 * (lo + hi)
        rho_mid = self.rho(mid, mid)
        dot = float(best[1] @ rho_mid)
        if dot <= 0.2:
            mid = 0.5 * (best[0] + mid)
            rho_mid = self.rho(mid, mid)
        base_mid = self.basis(mid, mid)
        self._anchors.append((mid, rho_mid, base_mid))
        self.extra_switches.append(mid)
        return self._anchor_for(t, ctx)


def _complement(rho: np.ndarray) -> np.ndarray:
    n = rho.size
    full, _ = np.linalg.qr(np.hstack([rho.reshape(-1, 1), np.eye(n)]))
    return full[:, 1:]


class ReducedCurveBundle:
    """Reduced Jacobi curve of a trajectory, as a LagrangianCurve."""

    def __init__(self, traj: Trajectory, space: ReducedSpace | None = None):
        self.traj = traj
        self.space = space or reduce_space(traj.atlas, traj.base)
        if self.space.trivial:
            raise StructuralError("one degree of freedom reduces to a point")
        self._grad = self.space.grad
        self._kernel = _SmoothKernel(self._row, traj.base.n)

    def _row(self, t: float, ctx: float) -> np.ndarray:
        w = self.traj.vertical_pulled(t, ctx)
        return self._grad @ w

    def kernel_coeffs(self, t: float, ctx: float | None = None) -> np.ndarray:
        return self._kernel.basis(t, t if ctx is None else ctx)

    def frame_gram(self, t: float, ctx: float | None = None):
        ctx = t if ctx is None else ctx
        w = self.traj.vertical_pulled(t, ctx)
        g = self.traj.gram(t, ctx)
        k = self._kernel.basis_from_row(self._grad @ w, t, ctx)
        return self.space.representative_basis.T @ (w @ k), k.T @ g @ k

    def frame(self, t: float, ctx: float | None = None) -> np.ndarray:
        return self.frame_gram(t, ctx)[0]

    def gram(self, t: float, ctx: float | None = None) -> np.ndarray:
        return self.frame_gram(t, ctx)[1]

    def lagrangian_curve(self) -> LagrangianCurve:
        from .jacobi import padded_ensure

        def switches():
            return sorted(list(self.traj.switch_times) + self._kernel.extra_switches)

        return LagrangianCurve(
            omega=self.space.reduced_omega,
            dim=self.traj.base.n - 1,
            frame_gram=self.frame_gram,
            switches=switches,
            prepare=padded_ensure(self.traj),
            label="reduced-jacobi",
        )


def reduced_curve_frame(obj, alpha: PhasePoint, opts: IntegratorOptions | None = None,
                        trajectory: Trajectory | None = None,
                        fd_step: float = 5e-3) -> CurveFrame:
    """Canonical-frame machinery of the reduced Jacobi curve at alpha."""
    traj = trajectory or Trajectory(obj, alpha, opts)
    bundle = ReducedCurveBundle(traj)
    return CurveFrame(bundle.lagrangian_curve(), fd_step=fd_step)


class RebasedScalarCurvature:
    """Scalar reduced curvature along a flow line, evaluated from way stations.

    A one-dimensional reduced curvature is independent of the canonical-frame
    gauge, so its value at time t on the base curve equals its value at time
    t - t_j on the curve of the flowed point at any station time t_j.  On
    strongly hyperbolic flows the pullback to a distant base loses the
    subdominant subspace below floating-point resolution; hopping between
    stations keeps every pullback short.
    """

    def __init__(self, obj, traj: Trajectory, fd_step: float = 5e-3,
                 spacing: float = 6.0):
        if traj.base.n != 2:
            raise StructuralError("rebased evaluation applies to scalar reductions")
        self.obj = obj
        self.fd_step = fd_step
        self.spacing = spacing
        cf0 = CurveFrame(ReducedCurveBundle(traj).lagrangian_curve(), fd_step=fd_step)
        self._stations = {0: (traj, cf0)}

    def _station(self, j: int):
        st = self._stations.get(j)
        if st is None:
            src_traj, _ = self._station(j - 1 if j > 0 else j + 1)
            beta = src_traj.point_at(self.spacing if j > 0 else -self.spacing)
            traj = Trajectory(self.obj, beta, src_traj.opts)
            cf = CurveFrame(ReducedCurveBundle(traj).lagrangian_curve(),
                            fd_step=self.fd_step)
            self._stations[j] = (traj, cf)
        return self._stations[j]

    def __call__(self, t: float) -> np.ndarray:
        j = int(math.floor(t / self.spacing + 0.5)) if math.isfinite(self.spacing) else 0
        return self._station(j)[1].jet(t - j * self.spacing).curvature


def reduced_jacobi_frame(obj, alpha: PhasePoint, grid,
                         opts: IntegratorOptions | None = None,
                         trajectory: Trajectory | None = None,
                         fd_step: float = 5e-3) -> ReducedFrame:
    """Reduced canonical frame and curvature on a grid of times."""
    grid = np.asarray(grid, dtype=float)
    atlas = as_atlas(obj)
    if atlas.dim_config == 1:
        empty = np.zeros((grid.size, 0, 0))
        return ReducedFrame(times=grid, E=empty, F=empty, reduced_curvature=empty,
                            darboux_residual=0.0, trivial=True)
    cf = reduced_curve_frame(obj, alpha, opts=opts, trajectory=trajectory,
                             fd_step=fd_step)
    m = atlas.dim_config - 1
    e_arr = np.empty((grid.size, 2 * m, m))
    f_arr = np.empty((grid.size, 2 * m, m))
    r_arr = np.empty((grid.size, m, m))
    worst = 0.0
    for k in np.argsort(np.abs(grid), kind="stable"):
        jet = cf.jet(float(grid[k]))
        e_arr[k], f_arr[k], r_arr[k] = jet.E, jet.F, jet.curvature
        worst = max(worst, jet.darboux_residual)
    return ReducedFrame(times=grid, E=e_arr, F=f_arr, reduced_curvature=r_arr,
                        darboux_residual=worst, frame=cf)


# -- block-matrix route to the reduced curvature --------------------------------


def _adapted_frame_stencil(traj: Trajectory, bundle: ReducedCurveBundle,
                           h: float, halfwidth: int):
    """Adapted orthonormal frames on a stencil around zero.

    The frame at each time is orthonormal for the canonical form with its
    first n-1 vectors inside the symplectic complement of the flow direction,
    and the last vector signed so its pairing with the flow direction is
    positive.  Returns (frames, c values).
    """
    om = traj.base_omega
    v = bundle.space.hvec
    n = traj.base.n
    frames, cs = [], []
    for k in range(-halfwidth, halfwidth + 1):
        t = k * h
        w = traj.vertical_pulled(t, 0.0)
        g = traj.gram(t, 0.0)
        row = v @ om @ w
        nrm = np.linalg.norm(row)
        if nrm < 1e-12:
            raise TransversalityError(f"flow direction tangent to the curve at t={t:.4g}")
        rho = row / nrm
        kern = bundle.kernel_coeffs(t, 0.0)
        gcand = np.hstack([kern, rho.reshape(-1, 1)])
        cand = w @ gcand
        gmat = gcand.T @ g @ gcand
        low = np.linalg.cholesky(0.5 * (gmat + gmat.T))
        coeff = np.linalg.solve(low.T, np.eye(n))
        frame = cand @ coeff
        c_val = float(v @ om @ frame[:, -1])
        if c_val < 0:
            frame[:, -1] = -frame[:, -1]
            c_val = -c_val
        frames.append(frame)
        cs.append(c_val)
    return frames, np.asarray(cs)


@dataclass(eq=False)
class BlockFormulaResult:
    reduced_curvature: np.ndarray
    full_curvature: np.ndarray
    omega_bar: np.ndarray
    omega_bar_dot: np.ndarray
    c: float
    cdot: float
    cddot: float
    offdiagonal_residual: float
    corner_residual: float
    adapted_basis: np.ndarray
    conditioning: float


def reduced_curvature_via_formula(obj, alpha: PhasePoint,
                                  opts: IntegratorOptions | None = None,
                                  trajectory: Trajectory | None = None,
                                  fd_step: float = 5e-3) -> BlockFormulaResult:
    """Reduced curvature extracted from the full curvature block identity.

    Builds the adapted orthonormal frame (first n-1 vectors in the symplectic
    complement of the flow direction), evaluates the full curvature in the
    induced canonical gauge at time zero, and undoes the rank-one and
    derivative corrections of the quotient construction.  The residuals of
    the predicted off-diagonal block and corner entry are returned as
    diagnostics.
    """
    traj = trajectory or Trajectory(obj, alpha, opts)
    bundle = ReducedCurveBundle(traj)
    n = traj.base.n
    if n < 2:
        raise StructuralError("block formula needs at least two degrees of freedom")
    om = traj.base_omega
    v = bundle.space.hvec
    h = fd_step
    half = 4
    traj.ensure(half * h)
    traj.ensure(-half * h)
    frames, cs = _adapted_frame_stencil(traj, bundle, h, half)
    e0 = frames[half]
    e_dot = stencil_diff1(frames[half - 2:half + 3], h)
    e_ddot = stencil_diff2(frames[half - 2:half + 3], h)
    derivs = [stencil_diff1(frames[k - 2:k + 3], h) for k in range(2, 2 * half - 1)]
    om_series = []
    for d in derivs:
        o = d.T @ om @ d
        om_series.append(0.5 * (o - o.T))
    center = half - 2
    om0 = om_series[center]
    om_dot = stencil_diff1(om_series[center - 2:center + 3], h)
    # canonical gauge at zero: U(0) = I, Udot = Omega/2
    f0 = e_dot - 0.5 * e0 @ om0
    fdot0 = e_ddot - e_dot @ om0 - 0.5 * e0 @ om_dot + 0.25 * e0 @ om0 @ om0
    r_full_raw = fdot0.T @ om @ f0
    r_full, _ = symmetrize(r_full_raw)
    c0 = cs[half]
    cdot = float(stencil_diff1(cs[half - 2:half + 3], h))
    cddot = float(stencil_diff2(cs[half - 2:half + 3], h))
    if abs(c0) < 1e-10:
        raise TransversalityError("flow-direction pairing c(0) vanishes")
    obar_series = [o[-1, :-1] for o in om_series]
    obar = obar_series[center]
    obar_dot_raw = stencil_diff1(obar_series[center - 2:center + 3], h)
    # gauge correction: the block rotation killing the upper-left pairings
    # contributes half its generator to the derivative of the last row
    obar_dot = obar_dot_raw + 0.5 * om0[:-1, :-1] @ obar
    r_reduced = r_full[:-1, :-1] + 0.75 * np.outer(obar, obar)
    off_pred = (cdot / c0) * obar + 0.5 * obar_dot
    off_res = float(np.max(np.abs(r_full[:-1, -1] - off_pred))) if n > 1 else 0.0
    corner_pred = 0.25 * float(obar @ obar) - cddot / c0
    corner_res = abs(r_full[-1, -1] - corner_pred)
    return BlockFormulaResult(
        reduced_curvature=r_reduced, full_curvature=r_full, omega_bar=obar,
        omega_bar_dot=obar_dot, c=c0, cdot=cdot, cddot=cddot,
        offdiagonal_residual=off_res, corner_residual=corner_res,
        adapted_basis=e0, conditioning=abs(cdot / c0),
    )


def reduced_basis_transition(bundle: ReducedCurveBundle, adapted_frame: np.ndarray,
                             reduced_jet_e: np.ndarray) -> np.ndarray:
    """Orthogonal transition from the reduced canonical basis to the descended
    adapted basis, for comparing curvature matrices entrywise."""
    descended = bundle.space.representative_basis.T @ adapted_frame[:, :-1]
    o_t, *_ = np.linalg.lstsq(reduced_jet_e, descended, rcond=None)
    return polar_orthogonalize(o_t.T)


def quadratic_form_correction(obj, alpha: PhasePoint, w: np.ndarray,
                              trajectory: Trajectory | None = None,
                              opts: IntegratorOptions | None = None,
                              fd_step: float = 5e-3,
                              bracket_step: float = 1e-2) -> dict:
    """Both sides of the quotient quadratic-form identity for a vertical w.

    For w vertical and tangent to the shell the reduced curvature form equals
    the full one plus 3/4 of the squared pairing of the double bracket of the
    unit normal section with w.  Returns the three pieces and the residual.
    """
    traj = trajectory or Trajectory(obj, alpha, opts)
    bundle = ReducedCurveBundle(traj)
    om = traj.base_omega
    n = traj.base.n
    # unit normal xi: the last adapted frame vector at time zero
    frames, _ = _adapted_frame_stencil(traj, bundle, fd_step, 2)
    xi = frames[2][:, -1]
    pulled = []
    for k in (-2, -1, 0, 1, 2):
        s = k * bracket_step
        z, chart, _, minv = traj._eval(s, ctx=0.0) if s != 0.0 else (
            traj.base.coords, traj.base.chart, None, np.eye(2 * n))
        sys = traj.atlas.system(chart)
        z_use = traj.base.coords if s == 0.0 else z
        pulled.append(minv @ (-sys.vector_field_jacobian(z_use) @ xi))
    double_bracket = stencil_diff1(pulled, bracket_step)
    pairing = float(double_bracket @ om @ w)
    from .jacobi import curvature_operator, trajectory_curve

    r_full, jet0 = curvature_operator(obj, alpha, "frame", trajectory=traj)
    b_coef, *_ = np.linalg.lstsq(jet0.E, w.reshape(-1, 1), rcond=None)
    full_quad = float(b_coef.T @ r_full @ b_coef)
    cf_red = CurveFrame(bundle.lagrangian_curve(), fd_step=fd_step)
    jet_red = cf_red.jet(0.0)
    w_red = bundle.space.project(w)
    a_coef, *_ = np.linalg.lstsq(jet_red.E, w_red.reshape(-1, 1), rcond=None)
    red_quad = float(a_coef.T @ jet_red.curvature @ a_coef)
    correction = 0.75 * pairing ** 2
    return {
        "reduced_quadratic": red_quad,
        "full_quadratic": full_quad,
        "correction": correction,
        "residual": red_quad - full_quad - correction,
    }
