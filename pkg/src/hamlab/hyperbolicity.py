"""Conjugate points, invariant distributions, and hyperbolicity diagnostics.

The reduced Jacobi curve of a trajectory feeds a curvature callback into the
linear second-order machinery; zeros of det B locate conjugate points, the
horizon limits of the two-point Riccati solutions build the forward/backward
invariant distributions, and the canonical frame at each time provides the
metric in which contraction rates are measured (frame vectors at time zero
orthonormal).  All verdicts are pointwise along sampled trajectories; the
compactness hypotheses of the global statements are not checkable here and
are flagged as such in the reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConjugatePointError, StructuralError
from .jacobi import CurveFrame, trajectory_curve
from .numutil import principal_angles, weighted_linear_fit
from .phase import IntegratorOptions, PhasePoint, Trajectory, as_atlas
from .reduction import ReducedCurveBundle, reduce_space
from .riccati import (
    JointFundamental,
    LimitSolution,
    RiccatiProblem,
    detect_singular_times,
    limit_riccati,
)

COMPACTNESS_NOTE = "criteria evaluated pointwise; compactness hypothesis not checked"

# the finite-difference noise floor of frame-jet curvature values is ~3e-8;
# driving the linear flows tighter makes the solver chase that noise
_CURV_FLOW_KW = {"rtol": 3e-8, "atol": 1e-12}


def _jet_step(obj, fd_step: float) -> float:
    declared = getattr(obj, "jet_fd_step", None)
    return declared if declared is not None else fd_step


def _curvature_problem(traj: Trajectory, reduced: bool, fd_step: float = 5e-3,
                       obj=None):
    """Riccati problem driven by the (reduced) curvature along the trajectory.

    Scalar reductions on models that declare a rebase spacing are evaluated
    from way stations along the flow, which stays accurate at arbitrary
    times; the returned CurveFrame is always the direct one at the base.
    """
    fd_step = _jet_step(obj, fd_step)
    if reduced:
        bundle = ReducedCurveBundle(traj)
        cf = CurveFrame(bundle.lagrangian_curve(), fd_step=fd_step)
        size = traj.base.n - 1
        spacing = getattr(obj, "rebase_spacing", None)
        if size == 1 and spacing is not None:
            from .reduction import RebasedScalarCurvature

            rb = RebasedScalarCurvature(obj, traj, fd_step=fd_step, spacing=spacing)
            return RiccatiProblem(size=1, curvature=rb), cf, bundle
    else:
        bundle = None
        cf = CurveFrame(trajectory_curve(traj), fd_step=fd_step)
        size = traj.base.n
    problem = RiccatiProblem(size=size, curvature=lambda t: cf.jet(t).curvature)
    return problem, cf, bundle


@dataclass(eq=False)
class ConjugateReport:
    base: PhasePoint
    horizon: float
    conjugate_times: list
    method: str
    reduced: bool

    @property
    def clean(self) -> bool:
        return not self.conjugate_times


def conjugate_scan(obj, alpha: PhasePoint, T: float, reduced: bool = True,
                   opts: IntegratorOptions | None = None,
                   trajectory: Trajectory | None = None,
                   scan_step: float = 0.05, fd_step: float = 5e-3) -> ConjugateReport:
    """Times in (0, T] where the (reduced) Jacobi curve meets its start.

    Zeros of det B for the curvature-driven linear equation are bracketed on
    a scan grid and refined by bisection; rank drops without a determinant
    sign change are reported as degenerate tangencies.
    """
    atlas = as_atlas(obj)
    traj = trajectory or Trajectory(obj, alpha, opts)
    if reduced and atlas.dim_config == 1:
        reduced = False
    problem, _, _ = _curvature_problem(traj, reduced, fd_step, obj=obj)
    from .riccati import LinearFlow

    m = problem.size
    lf = LinearFlow(problem, np.zeros((m, m)), np.eye(m), **_CURV_FLOW_KW)
    t_lo = min(scan_step, T / 10.0)
    grid = np.linspace(t_lo, T, max(8, int(math.ceil((T - t_lo) / scan_step)) + 1))
    zeros = detect_singular_times(lf, grid)
    times = [(float(t), int(mult), kind) for t, mult, kind in zeros if t > 1e-10]
    return ConjugateReport(base=traj.base, horizon=T, conjugate_times=times,
                           method="det-B bracketing", reduced=reduced)


@dataclass(eq=False)
class InvariantDistribution:
    """Forward (+) or backward (-) invariant distribution at a base point."""

    base: PhasePoint
    sign: int
    reduced_basis: np.ndarray
    lifted_basis: np.ndarray
    construction_horizon: float
    convergence_gap: float
    converged: bool
    limit: LimitSolution
    angle_to_vertical: float
    flow_membership_residual: float
    shell_residual: float
    bundle: ReducedCurveBundle = None
    frame: CurveFrame = None
    invariance_residual: Optional[dict] = None


def build_invariant_distribution(obj, alpha: PhasePoint, sign: int,
                                 tol: float = 1e-6,
                                 opts: IntegratorOptions | None = None,
                                 trajectory: Trajectory | None = None,
                                 horizon0: float = 10.0, max_horizon: float = 640.0,
                                 fd_step: float = 5e-3,
                                 check_conjugate: bool = True) -> InvariantDistribution:
    """Span of F(0) - U(0) E(0) for the horizon limit U of the reduced curve.

    Horizons double until the limit gap drops below `tol`; a conjugate point
    inside the construction horizon raises, while limit divergence yields a
    non-converged (inconclusive) result.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    atlas = as_atlas(obj)
    traj = trajectory or Trajectory(obj, alpha, opts)
    n = traj.base.n
    if n == 1:
        x = atlas.system(traj.base.chart).vector_field(traj.base.coords)
        return InvariantDistribution(
            base=traj.base, sign=sign, reduced_basis=np.zeros((0, 0)),
            lifted_basis=x.reshape(-1, 1), construction_horizon=0.0,
            convergence_gap=0.0, converged=True, limit=None,
            angle_to_vertical=math.pi / 2, flow_membership_residual=0.0,
            shell_residual=0.0)
    problem, cf, bundle = _curvature_problem(traj, reduced=True,
                                              fd_step=fd_step, obj=obj)
    if check_conjugate:
        scan = conjugate_scan(obj, traj.base, min(horizon0, 10.0), reduced=True,
                              trajectory=traj, fd_step=fd_step)
        if not scan.clean:
            raise ConjugatePointError(
                f"conjugate time {scan.conjugate_times[0][0]:.6g} inside the "
                "construction horizon", time=scan.conjugate_times[0][0])
    limit = limit_riccati(problem, sign, tol=tol, t_grid=[0.0],
                          horizon0=horizon0, max_horizon=max_horizon,
                          **_CURV_FLOW_KW)
    jet0 = cf.jet(0.0)
    reduced_basis = jet0.F - jet0.E @ limit.U0
    lifted = np.hstack([
        bundle.space.representative_basis @ reduced_basis,
        bundle.space.hvec.reshape(-1, 1),
    ])
    coords_basis = frame_coordinates(cf, 0.0, reduced_basis)
    coords_vert = frame_coordinates(cf, 0.0, jet0.E)
    angs = principal_angles(coords_basis, coords_vert)
    angle_to_vertical = float(angs[-1]) if angs.size else math.pi / 2
    om_red = bundle.space.reduced_omega
    iso = float(np.max(np.abs(reduced_basis.T @ om_red @ reduced_basis)))
    scale = max(1.0, float(np.max(np.abs(reduced_basis))) ** 2)
    if iso > 1e-6 * scale:
        raise StructuralError(f"limit distribution not isotropic: {iso:.2e}")
    x = bundle.space.hvec
    coef, *_ = np.linalg.lstsq(lifted, x.reshape(-1, 1), rcond=None)
    flow_res = float(np.max(np.abs(lifted @ coef - x.reshape(-1, 1))))
    flow_res /= max(1.0, float(np.max(np.abs(x))))
    shell_res = float(np.max(np.abs(bundle.space.grad @ lifted)))
    shell_res /= max(1.0, float(np.max(np.abs(lifted))))
    return InvariantDistribution(
        base=traj.base, sign=sign, reduced_basis=reduced_basis, lifted_basis=lifted,
        construction_horizon=abs(limit.horizon_sequence[-1]),
        convergence_gap=limit.convergence_gap, converged=limit.converged,
        limit=limit, angle_to_vertical=angle_to_vertical,
        flow_membership_residual=flow_res, shell_residual=shell_res,
        bundle=bundle, frame=cf)


def reduced_monodromy(traj: Trajectory, t: float, space0=None) -> np.ndarray:
    """Matrix of the descended linearized flow between quotient coordinates."""
    space0 = space0 or reduce_space(traj.atlas, traj.base)
    beta = traj.point_at(t)
    space_t = reduce_space(traj.atlas, beta)
    return space_t.representative_basis.T @ traj.monodromy(t) \
        @ space0.representative_basis


def frame_coordinates(cf: CurveFrame, t: float, vectors: np.ndarray) -> np.ndarray:
    """Stacked (a, b) coefficients of vectors in the Darboux frame at time t."""
    a, b = cf.coefficients(t, vectors)
    return np.vstack([a, b])


def invariance_residual(obj, dist: InvariantDistribution, s_values,
                        tol: float = 1e-6, opts: IntegratorOptions | None = None,
                        max_horizon: float = 640.0) -> dict:
    """Angle between the pushed distribution and the one built at the flowed point.

    Angles are measured in the frame metric of the target point (canonical
    frame coordinates at time zero).
    """
    traj = dist.bundle.traj
    out = {}
    for s in s_values:
        beta = traj.point_at(s)
        pushed = reduced_monodromy(traj, s, dist.bundle.space) @ dist.reduced_basis
        fresh = build_invariant_distribution(
            obj, beta, dist.sign, tol=tol, opts=opts or traj.opts,
            horizon0=max(10.0, dist.construction_horizon / 4.0),
            max_horizon=max(max_horizon, dist.construction_horizon * 2.0),
            check_conjugate=False)
        coords_pushed = frame_coordinates(fresh.frame, 0.0, pushed)
        coords_fresh = frame_coordinates(fresh.frame, 0.0, fresh.reduced_basis)
        ang = principal_angles(coords_pushed, coords_fresh)
        out[float(s)] = float(ang[0]) if ang.size else 0.0
    return out


@dataclass(eq=False)
class AnosovVerdict:
    status: str
    evidence: dict
    criteria_used: list
    notes: str = COMPACTNESS_NOTE


def anosov_diagnose(obj, alpha_samples, T_fit: float = 8.0,
                    tol: float = 1e-6, angle_threshold: float = 1e-3,
                    rate_margin: float = 0.02,
                    opts: IntegratorOptions | None = None,
                    horizon0: float = 10.0, max_horizon: float = 640.0,
                    fd_step: float = 5e-3) -> AnosovVerdict:
    """Three-way hyperbolicity diagnosis at sampled points.

    (a) the reduced forward/backward distributions intersect trivially,
    (b) the lifted ones meet exactly in the flow direction, and
    (c) frame-metric norms along both distributions decay exponentially,
    with the fitted rate read from the second half of the window.  The
    verdict is `anosov` only when all three agree at every sample.
    """
    if as_atlas(obj).dim_config == 1:
        return AnosovVerdict(status="inconclusive",
                             evidence={"reason": "trivial reduction in one degree "
                                                 "of freedom"},
                             criteria_used=[])
    per_point = []
    statuses = []
    for alpha in alpha_samples:
        traj = Trajectory(obj, alpha, opts)
        try:
            plus = build_invariant_distribution(
                obj, alpha, +1, tol=tol, trajectory=traj, horizon0=horizon0,
                max_horizon=max_horizon, fd_step=fd_step)
            minus = build_invariant_distribution(
                obj, alpha, -1, tol=tol, trajectory=traj, horizon0=horizon0,
                max_horizon=max_horizon, fd_step=fd_step)
        except ConjugatePointError as exc:
            per_point.append({"status": "not_anosov",
                              "witness": f"conjugate point at t={exc.time:.6g}"})
            statuses.append("not_anosov")
            continue
        if not (plus.converged and minus.converged):
            per_point.append({"status": "inconclusive",
                              "witness": "horizon limit did not converge"})
            statuses.append("inconclusive")
            continue
        cf = plus.frame
        coords_p = frame_coordinates(cf, 0.0, plus.reduced_basis)
        coords_m = frame_coordinates(cf, 0.0, minus.reduced_basis)
        angs = principal_angles(coords_p, coords_m)
        min_angle = float(angs[-1]) if angs.size else math.pi / 2
        crit_a = min_angle > angle_threshold

        lift_angles = principal_angles(plus.lifted_basis, minus.lifted_basis)
        near_zero = int(np.sum(lift_angles < angle_threshold))
        crit_b = near_zero == 1
        if near_zero >= 1:
            inter = _intersection_basis(plus.lifted_basis, minus.lifted_basis)
            xvec = plus.bundle.space.hvec if plus.bundle is not None else None
            if inter.shape[1] >= 1 and xvec is not None:
                flow_angle = principal_angles(inter[:, :1] if near_zero == 1 else inter,
                                              xvec.reshape(-1, 1))
                crit_b = crit_b and float(flow_angle[0]) < 10 * angle_threshold
        fits = {}
        slopes = []
        ts = np.linspace(0.0, T_fit, 33)
        for name, dist in (("plus", plus), ("minus", minus)):
            basis = dist.reduced_basis
            norms = np.empty((ts.size, basis.shape[1]))
            for k, t in enumerate(ts):
                coords = frame_coordinates(dist.frame, dist.sign * t, basis)
                norms[k] = np.linalg.norm(coords, axis=0)
            half = ts >= 0.5 * T_fit
            for j in range(basis.shape[1]):
                slope, intercept = weighted_linear_fit(ts[half], np.log(norms[half, j]))
                slopes.append(slope)
                fits.setdefault(name, []).append(
                    {"c2": -slope, "c1": math.exp(intercept)})
        worst = max(slopes)
        crit_c = worst < -rate_margin
        c2 = -worst
        flags = (crit_a, crit_b, crit_c)
        if all(flags):
            point_status = "anosov"
        elif not any(flags):
            point_status = "not_anosov"
        else:
            point_status = "inconclusive"
        witness = None
        if not crit_a:
            witness = (f"distributions coincide: min principal angle "
                       f"{min_angle:.2e} rad")
        per_point.append({
            "status": point_status,
            "min_angle_reduced": min_angle,
            "lifted_zero_angles": near_zero,
            "fitted_c2": c2,
            "fits": fits,
            "gap_plus": plus.convergence_gap,
            "gap_minus": minus.convergence_gap,
            "witness": witness,
        })
        statuses.append(point_status)
    if all(s == "anosov" for s in statuses):
        status = "anosov"
    elif any(s == "not_anosov" for s in statuses):
        status = "not_anosov"
    else:
        status = "inconclusive"
    c2_vals = [p["fitted_c2"] for p in per_point if "fitted_c2" in p]
    evidence = {
        "per_point": per_point,
        "fitted_c2": min(c2_vals) if c2_vals else None,
    }
    return AnosovVerdict(status=status, evidence=evidence,
                         criteria_used=["reduced-intersection", "lifted-intersection",
                                        "exponential-rate"])


def _intersection_basis(a: np.ndarray, b: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    stacked = np.hstack([a, -b])
    _, s, vt = np.linalg.svd(stacked)
    null_mask = np.concatenate([s, np.zeros(stacked.shape[1] - s.size)]) < rtol * s[0]
    vecs = []
    for idx in range(vt.shape[0]):
        if idx >= stacked.shape[1] or not null_mask[idx]:
            continue
        vecs.append(a @ vt[idx, : a.shape[1]])
    if not vecs:
        return np.zeros((a.shape[0], 0))
    return np.stack(vecs, axis=1)


def nonpositive_criterion(obj, alpha: PhasePoint, T: float,
                          neg_threshold: float = 1e-3,
                          pos_tolerance: float = 1e-7,
                          intersection_threshold: float = 1e-4,
                          opts: IntegratorOptions | None = None,
                          samples: int = 81, fd_step: float = 5e-3) -> dict:
    """Hyperbolicity test under non-positive reduced curvature.

    Scans [-T, T] for a time where the reduced curvature is strictly
    negative, and independently tracks the drift of the time-zero horizontal
    frame out of the moving horizontal space (a common direction for all
    times contradicts hyperbolicity).  The two routes must agree.
    """
    traj = Trajectory(obj, alpha, opts)
    bundle = ReducedCurveBundle(traj)
    cf = CurveFrame(bundle.lagrangian_curve(), fd_step=_jet_step(obj, fd_step))
    ts = np.linspace(-T, T, samples)
    order = np.argsort(np.abs(ts), kind="stable")
    max_eig = -np.inf
    neg_time = None
    jets = {}
    for k in order:
        jet = cf.jet(float(ts[k]))
        jets[float(ts[k])] = jet
        eig = np.linalg.eigvalsh(jet.curvature)
        max_eig = max(max_eig, float(eig.max()))
        if eig.min() < -neg_threshold and neg_time is None:
            neg_time = float(ts[k])
    if max_eig > pos_tolerance:
        return {"status": "hypothesis_violation",
                "max_curvature_eig": max_eig,
                "note": "reduced curvature is not non-positive on the window"}
    # second route: does some combination of the horizontal frame stay horizontal
    f0 = jets[0.0].F
    rows = []
    for t in sorted(jets):
        a, _ = cf.coefficients(t, f0)
        rows.append(a)
    stacked = np.vstack(rows)
    sv = np.linalg.svd(stacked, compute_uv=False)
    m = f0.shape[1]
    smallest = float(sv[-1]) if sv.size else 0.0
    witness_combo = None
    if smallest < intersection_threshold * math.sqrt(len(rows)):
        _, _, vt = np.linalg.svd(stacked)
        combo = vt[-1]
        drift = max(float(np.linalg.norm(a @ combo)) for a in rows)
        if drift < intersection_threshold:
            witness_combo = combo
    fires = neg_time is not None
    no_witness = witness_combo is None
    if fires and no_witness:
        status = "anosov"
    elif (not fires) and (witness_combo is not None):
        status = "not_anosov"
    else:
        status = "inconclusive"
    return {
        "status": status,
        "negative_time": neg_time,
        "max_curvature_eig": max_eig,
        "horizontal_drift_min_sv": smallest,
        "persistent_horizontal_witness": witness_combo is not None,
        "routes_agree": fires == no_witness,
        "note": COMPACTNESS_NOTE,
    }


def horizontal_growth_profile(obj, alpha: PhasePoint, w_reduced: np.ndarray,
                              T: float, samples: int = 41,
                              opts: IntegratorOptions | None = None,
                              fd_step: float = 5e-3) -> dict:
    """Norms of the horizontal part of the pushed vector, in the frame metric.

    For non-positive reduced curvature the profile must increase for t > 0
    and decrease for t < 0 when the vector is vertical; a violation of the
    curvature sign is reported instead of a monotonicity verdict.
    """
    traj = Trajectory(obj, alpha, opts)
    bundle = ReducedCurveBundle(traj)
    cf = CurveFrame(bundle.lagrangian_curve(), fd_step=_jet_step(obj, fd_step))
    ts = np.linspace(-T, T, samples)
    order = np.argsort(np.abs(ts), kind="stable")
    w = np.asarray(w_reduced, dtype=float).reshape(-1, 1)
    profile = np.empty(ts.size)
    max_eig = -np.inf
    for k in order:
        t = float(ts[k])
        jet = cf.jet(t)
        _, b = cf.coefficients(t, w)
        profile[k] = float(np.linalg.norm(b))
        max_eig = max(max_eig, float(np.linalg.eigvalsh(jet.curvature).max()))
    hypothesis_ok = max_eig <= 1e-7
    pos = ts >= 0.0
    increasing = bool(np.all(np.diff(profile[pos]) >= -1e-9))
    decreasing = bool(np.all(np.diff(profile[~pos]) <= 1e-9))
    return {
        "times": ts,
        "profile": profile,
        "hypothesis_ok": hypothesis_ok,
        "monotone": (increasing and decreasing) if hypothesis_ok else None,
        "max_curvature_eig": max_eig,
    }
