"""Matrix second-order equations, Riccati solutions, two-point solutions, limits.

Everything is driven by a symmetric curvature callback t -> R(t) through the
linear equation  Y'' + R(t) Y = 0.  The two standard fundamental pairs
(A(0)=I, A'(0)=0) and (B(0)=0, B'(0)=I) are integrated jointly and lazily,
which makes horizon scans cheap: the two-point solution with zero boundary
value at s is

    D(s, t) = A(t) - B(t) B(s)^{-1} A(s),

its logarithmic derivative U(s, t) = D' D^{-1} solves the Riccati equation,
and the monotone horizon limits U+/U- come from pushing s out.  The integral
form of D over B^{-1} B^{-T} is kept as a verification route, with the
1/tau^2 leading term integrated in closed form.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad_vec, solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    AccuracyError,
    ConjugatePointError,
    ConvergenceError,
    OverflowGuardError,
)
from .numutil import stencil_diff1, symmetrize


@dataclass(frozen=True)
class PinchBounds:
    """Declared curvature bounds: R >= -k^2 I and/or -K2^2 I >= R >= -K1^2 I."""

    k: Optional[float] = None
    K1: Optional[float] = None
    K2: Optional[float] = None


@dataclass(eq=False)
class RiccatiProblem:
    """Curvature callback with optional declared bounds (verified by sampling)."""

    size: int
    curvature: Callable[[float], np.ndarray]
    bounds: Optional[PinchBounds] = None

    def curvature_at(self, t: float) -> np.ndarray:
        r = np.asarray(self.curvature(float(t)), dtype=float)
        if r.shape == () or r.size == 1:
            r = r.reshape(1, 1)
        return 0.5 * (r + r.T)

    def verify_bounds(self, ts) -> None:
        """Check declared eigenvalue bounds on a sample of times."""
        if self.bounds is None:
            return
        slack = 1e-7
        for t in ts:
            eig = np.linalg.eigvalsh(self.curvature_at(t))
            if self.bounds.k is not None and eig.min() < -self.bounds.k ** 2 - slack:
                raise AccuracyError(
                    f"declared lower bound -k^2 violated at t={t:.4g}: {eig.min():.4g}")
            if self.bounds.K1 is not None and eig.min() < -self.bounds.K1 ** 2 - slack:
                raise AccuracyError(
                    f"declared lower bound -K1^2 violated at t={t:.4g}")
            if self.bounds.K2 is not None and eig.max() > -self.bounds.K2 ** 2 + slack:
                raise AccuracyError(
                    f"declared upper bound -K2^2 violated at t={t:.4g}: {eig.max():.4g}")


def constant_problem(mat) -> RiccatiProblem:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    return RiccatiProblem(size=mat.shape[0], curvature=lambda t: mat)


class LinearFlow:
    """Lazily extendable dense solution of Y'' + R(t) Y = 0, both time directions."""

    def __init__(self, problem: RiccatiProblem, y0, ydot0,
                 rtol: float = 1e-11, atol: float = 1e-13, max_step: float = np.inf):
        self.problem = problem
        self.m = problem.size
        y0 = np.atleast_2d(np.asarray(y0, dtype=float))
        ydot0 = np.atleast_2d(np.asarray(ydot0, dtype=float))
        self.cols = y0.shape[1]
        self._shape = y0.shape
        self._init = np.concatenate([y0.ravel(), ydot0.ravel()])
        self.rtol, self.atol, self.max_step = rtol, atol, max_step
        self._segs = {1: [], -1: []}
        self._ends = {1: [], -1: []}
        self._cont = {1: (0.0, self._init.copy()), -1: (0.0, self._init.copy())}

    def _rhs(self, t, y):
        half = y.size // 2
        yy = y[:half].reshape(self._shape)
        vv = y[half:].reshape(self._shape)
        return np.concatenate([vv.ravel(),
                               (-self.problem.curvature_at(t) @ yy).ravel()])

    def ensure(self, t: float) -> None:
        side = 1 if t >= 0.0 else -1
        while True:
            t_last, y_last = self._cont[side]
            if (side == 1 and t_last >= t) or (side == -1 and t_last <= t):
                return
            res = solve_ivp(self._rhs, (t_last, t), y_last, method="DOP853",
                            dense_output=True, rtol=self.rtol, atol=self.atol,
                            max_step=self.max_step)
            if res.status != 0:
                raise AccuracyError(f"linear flow failed near t={res.t[-1]:.4g}")
            self._segs[side].append((t_last, res.t[-1], res.sol))
            self._ends[side].append(abs(res.t[-1]))
            self._cont[side] = (res.t[-1], res.y[:, -1])
            if not np.all(np.isfinite(res.y[:, -1])):
                raise OverflowGuardError(
                    f"fundamental solution overflow near t={res.t[-1]:.4g}")

    def value(self, t: float):
        """(Y(t), Ydot(t)) pair."""
        if t == 0.0:
            y = self._init
        else:
            self.ensure(t)
            side = 1 if t > 0.0 else -1
            segs, ends = self._segs[side], self._ends[side]
            idx = min(bisect.bisect_left(ends, abs(t)), len(segs) - 1)
            y = segs[idx][2](t)
        half = y.size // 2
        return y[:half].reshape(self._shape).copy(), y[half:].reshape(self._shape).copy()


class JointFundamental:
    """The two standard fundamental pairs integrated as one lazy system."""

    def __init__(self, problem: RiccatiProblem, **kw):
        m = problem.size
        y0 = np.hstack([np.eye(m), np.zeros((m, m))])
        ydot0 = np.hstack([np.zeros((m, m)), np.eye(m)])
        self.flow = LinearFlow(problem, y0, ydot0, **kw)
        self.problem = problem
        self.m = m

    def pair(self, t: float):
        """(A, Adot, B, Bdot) at t."""
        y, ydot = self.flow.value(t)
        m = self.m
        return y[:, :m], ydot[:, :m], y[:, m:], ydot[:, m:]

    def b_only(self, t: float):
        y, ydot = self.flow.value(t)
        m = self.m
        return y[:, m:], ydot[:, m:]


@dataclass(eq=False)
class FundamentalSolution:
    """Grid snapshot of one matrix solution of the linear second-order equation."""

    times: np.ndarray
    B: np.ndarray
    Bdot: np.ndarray
    det_B: np.ndarray
    first_singular_time: Optional[float]
    wronskian_drift: float
    flow: LinearFlow = None
    problem: RiccatiProblem = None


@dataclass(eq=False)
class RiccatiSolution:
    times: np.ndarray
    S: np.ndarray
    residual: float
    asymmetry: float


@dataclass(eq=False)
class TwoPointSolution:
    """Boundary-value solution D(s, .) with D(s,0)=I, D(s,s)=0 and U = D' D^{-1}."""

    s: float
    times: np.ndarray
    D: np.ndarray
    U: np.ndarray
    M: np.ndarray
    boundary_residual: float
    quadrature_residual: float


@dataclass(eq=False)
class LimitSolution:
    """Horizon limit of two-point Riccati solutions, with its decay solution."""

    direction: int
    times: np.ndarray
    U: np.ndarray
    D: np.ndarray
    U0: np.ndarray
    horizon_sequence: list
    convergence_gap: float
    converged: bool
    monotone_ok: bool
    envelope: Optional[dict] = None
    joint: JointFundamental = None


def solve_linear(problem: RiccatiProblem, B0, Bdot0, grid,
                 wronskian_tol: float = 1e-6, **kw) -> FundamentalSolution:
    """Integrate Y'' + R Y = 0 from (B0, Bdot0) and snapshot it on the grid."""
    grid = np.asarray(grid, dtype=float)
    lf = LinearFlow(problem, B0, Bdot0, **kw)
    lf.ensure(float(grid.min()))
    lf.ensure(float(grid.max()))
    m = problem.size
    bs = np.empty((grid.size, m, m))
    bds = np.empty((grid.size, m, m))
    dets = np.empty(grid.size)
    b0 = np.atleast_2d(np.asarray(B0, float))
    bd0 = np.atleast_2d(np.asarray(Bdot0, float))
    w0 = bd0.T @ b0 - b0.T @ bd0
    drift = 0.0
    for k, t in enumerate(grid):
        b, bd = lf.value(t)
        bs[k], bds[k] = b, bd
        dets[k] = np.linalg.det(b)
        drift = max(drift, float(np.max(np.abs(bd.T @ b - b.T @ bd - w0))))
    scale = max(1.0, float(np.max(np.abs(bs))))
    if drift > wronskian_tol * scale:
        raise AccuracyError(f"Wronskian drift {drift:.3e} exceeds {wronskian_tol:.1e}")
    fst = None
    zeros = detect_singular_times(lf, grid)
    positive = [z for z in zeros if z[0] > 1e-12]
    if positive:
        fst = positive[0][0]
    return FundamentalSolution(times=grid, B=bs, Bdot=bds, det_B=dets,
                               first_singular_time=fst, wronskian_drift=drift,
                               flow=lf, problem=problem)


def detect_singular_times(lf: LinearFlow, grid, sv_threshold: float = 1e-9,
                          refine_tol: float = 1e-10):
    """Times in the grid range where B(t) drops rank, with multiplicities.

    Sign changes of det B are refined by bisection; dips of the smallest
    singular value below threshold without a sign change are flagged as
    degenerate (even multiplicity) tangencies.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        return []
    # one continuous integration; per-point extension would restart the solver
    lf.ensure(float(grid.min()))
    lf.ensure(float(grid.max()))

    def detf(t):
        return np.linalg.det(lf.value(t)[0])

    def svmin(t):
        return np.linalg.svd(lf.value(t)[0], compute_uv=False)[-1]

    dets = np.empty(grid.size)
    smin = np.empty(grid.size)
    smax = np.empty(grid.size)
    for k, t in enumerate(grid):
        sv = np.linalg.svd(lf.value(t)[0], compute_uv=False)
        smin[k], smax[k] = sv[-1], sv[0]
        dets[k] = np.linalg.det(lf.value(t)[0])
    out = []
    for k in range(grid.size - 1):
        t0, t1 = grid[k], grid[k + 1]
        # singular values grow with the solution; thresholds must be local
        local = sv_threshold * max(smax[k], smax[k + 1], 1.0)
        if dets[k] == 0.0:
            out.append((float(t0), _rank_drop(lf, t0, local), "crossing"))
            continue
        if dets[k] * dets[k + 1] < 0.0:
            root = brentq(detf, t0, t1, xtol=refine_tol)
            out.append((float(root), _rank_drop(lf, root, local), "crossing"))
        else:
            # tangential rank drop: minimize the smallest singular value
            s0, s1 = smin[k], smin[k + 1]
            smid = svmin(0.5 * (t0 + t1))
            if min(s0, s1, smid) < math.sqrt(local) and smid <= min(s0, s1):
                res = minimize_scalar(svmin, bounds=(t0, t1), method="bounded",
                                      options={"xatol": refine_tol})
                if res.fun < local:
                    out.append((float(res.x), _rank_drop(lf, res.x, local),
                                "degenerate"))
    dedup = []
    for item in sorted(out):
        if not dedup or abs(item[0] - dedup[-1][0]) > 1e-8:
            dedup.append(item)
    return dedup


def _rank_drop(lf: LinearFlow, t: float, threshold: float) -> int:
    sv = np.linalg.svd(lf.value(t)[0], compute_uv=False)
    return int(np.sum(sv < max(threshold, 1e-13 * max(sv[0], 1.0))))


def riccati_from_fundamental(fund: FundamentalSolution, cond_limit: float = 1e12,
                             residual_tol: float = 1e-6,
                             fd_step: float = 1e-4) -> RiccatiSolution:
    """S = Bdot B^{-1} on the subgrid where B is well conditioned."""
    times, ss = [], []
    asym_worst = 0.0
    for k, t in enumerate(fund.times):
        b = fund.B[k]
        if np.linalg.cond(b) > cond_limit:
            continue
        s = fund.Bdot[k] @ np.linalg.inv(b)
        s_sym, asym = symmetrize(s)
        scale = max(1.0, float(np.max(np.abs(s_sym))))
        asym_worst = max(asym_worst, asym / scale)
        times.append(t)
        ss.append(s_sym)
    if not times:
        raise ConjugatePointError("B singular on the whole requested grid")
    # residual of the defining equation, relative to its own term size 1 + |S|^2
    # (near a blowup the absolute residual is dominated by float rounding of S^2)
    residual = 0.0
    lf = fund.flow
    for t, s in zip(times, ss):
        try:
            sten = []
            for k in (-2, -1, 0, 1, 2):
                b, bd = lf.value(t + k * fd_step)
                sten.append(bd @ np.linalg.inv(b))
            sdot = stencil_diff1(sten, fd_step)
        except np.linalg.LinAlgError:
            continue
        r = fund.problem.curvature_at(t)
        raw = float(np.max(np.abs(sdot + s @ s + r)))
        residual = max(residual, raw / (1.0 + float(np.max(np.abs(s))) ** 2))
    if residual > residual_tol:
        raise AccuracyError(f"Riccati residual {residual:.3e} exceeds {residual_tol:.1e}")
    return RiccatiSolution(times=np.asarray(times), S=np.asarray(ss),
                           residual=residual, asymmetry=asym_worst)


def two_point(problem: RiccatiProblem, s: float, grid,
              joint: JointFundamental | None = None,
              check_quadrature: bool = True, **kw) -> TwoPointSolution:
    """Two-point solution D(s, .) and U(s, .) = D' D^{-1} on the grid.

    Production values come from the fundamental pair; the integral
    representation of D over B^{-1} B^{-T} (with the 1/tau^2 leading term
    subtracted and integrated exactly) is evaluated as a verification route.
    """
    grid = np.asarray(grid, dtype=float)
    joint = joint or JointFundamental(problem, **kw)
    joint.flow.ensure(s)
    for lo, hi in ((min(0.0, s), max(0.0, s)),):
        scan = np.linspace(lo, hi, max(16, int(16 * abs(s - 0.0))))
        zeros = [z for z in detect_singular_times(_b_flow(joint), scan)
                 if min(abs(z[0]), abs(z[0] - s)) > 1e-10]
        if zeros:
            raise ConjugatePointError(
                f"conjugate time t={zeros[0][0]:.6g} inside (0, {s:.4g})",
                time=zeros[0][0])
    a_s, _, b_s, _ = joint.pair(s)
    try:
        c = np.linalg.solve(b_s, a_s)
    except np.linalg.LinAlgError as exc:
        raise ConjugatePointError(f"B({s:.4g}) is singular") from exc
    m = problem.size
    ds = np.empty((grid.size, m, m))
    us = np.full((grid.size, m, m), np.nan)
    for k, t in enumerate(grid):
        a, adot, b, bdot = joint.pair(t)
        d = a - b @ c
        ddot = adot - bdot @ c
        ds[k] = d
        if abs(t - s) > 1e-12 and np.linalg.cond(d) < 1e12:
            u, _ = symmetrize(ddot @ np.linalg.inv(d))
            us[k] = u
    a0, adot0, b0, bdot0 = joint.pair(0.0)
    d_at_0 = a0 - b0 @ c
    a_s2, _, b_s2, _ = joint.pair(s)
    d_at_s = a_s2 - b_s2 @ c
    ddot_at_s = joint.pair(s)[1] - joint.pair(s)[3] @ c
    bres = max(
        float(np.max(np.abs(d_at_0 - np.eye(m)))),
        float(np.max(np.abs(d_at_s))),
        float(np.max(np.abs(ddot_at_s + np.linalg.inv(b_s).T))),
    )
    if bres > 1e-7 * max(1.0, float(np.linalg.norm(c))):
        raise AccuracyError(f"two-point boundary residual {bres:.3e}")
    ms = np.full((grid.size, m, m), np.nan)
    qres = 0.0
    if check_quadrature:
        for k, t in enumerate(grid):
            if t <= 1e-10 or t > s or s <= 0:
                continue
            mreg = _regularized_tail_integral(joint, t, s)
            ms[k] = mreg + (1.0 / t - 1.0 / s) * np.eye(m)
            b, _ = joint.b_only(t)
            qres = max(qres, float(np.max(np.abs(b @ ms[k] - ds[k]))))
    return TwoPointSolution(s=s, times=grid, D=ds, U=us, M=ms,
                            boundary_residual=bres, quadrature_residual=qres)


def _b_flow(joint: JointFundamental) -> LinearFlow:
    """Adapter viewing the B columns of the joint system as a LinearFlow."""

    class _View:
        def __init__(self, jt):
            self._jt = jt

        def value(self, t):
            return self._jt.b_only(t)

    return _View(joint)


def _regularized_tail_integral(joint: JointFundamental, t: float, s: float):
    m = joint.m

    def integrand(tau):
        b, _ = joint.b_only(tau)
        binv = np.linalg.inv(b)
        return binv @ binv.T - np.eye(m) / tau ** 2

    val, _ = quad_vec(integrand, t, s, epsabs=1e-12, epsrel=1e-10, limit=200)
    return val


def limit_riccati(problem: RiccatiProblem, direction: int, tol: float = 1e-8,
                  t_grid=None, horizon0: float = 10.0, max_horizon: float = 640.0,
                  joint: JointFundamental | None = None,
                  monotone_slack: float = 1e-7, **kw) -> LimitSolution:
    """Monotone horizon limit U+/U- of two-point Riccati solutions.

    Horizons double until two successive values differ by less than `tol` in
    sup norm over the grid; monotonicity in the horizon is asserted along the
    way (eigenvalue ordering with small slack).  A run that exhausts
    `max_horizon` returns `converged=False` rather than raising.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    t_grid = np.asarray([0.0] if t_grid is None else t_grid, dtype=float)
    joint = joint or JointFundamental(problem, **kw)
    m = problem.size
    if problem.bounds is not None:
        probe = np.linspace(min(-1.0, -abs(horizon0)), max(1.0, abs(horizon0)), 41)
        problem.verify_bounds(probe)

    def u_at(s):
        a_s, _, b_s, _ = joint.pair(s)
        if not np.all(np.isfinite(b_s)) or not np.all(np.isfinite(a_s)):
            raise OverflowGuardError(f"fundamental solution overflow at horizon {s:.3g}")
        c = np.linalg.solve(b_s, a_s)
        out = np.empty((t_grid.size, m, m))
        for k, t in enumerate(t_grid):
            a, adot, b, bdot = joint.pair(t)
            d = a - b @ c
            out[k], _ = symmetrize((adot - bdot @ c) @ np.linalg.inv(d))
        return out

    horizon = horizon0
    horizons = [direction * horizon]
    prev = u_at(direction * horizon)
    gap = np.inf
    monotone_ok = True
    while horizon * 2.0 <= max_horizon * (1.0 + 1e-12):
        horizon *= 2.0
        horizons.append(direction * horizon)
        cur = u_at(direction * horizon)
        diff = cur - prev if direction == 1 else prev - cur
        min_eig = min(np.linalg.eigvalsh(diff[k]).min() for k in range(t_grid.size))
        if min_eig < -monotone_slack * max(1.0, float(np.max(np.abs(cur)))):
            monotone_ok = False
            raise AccuracyError(
                f"horizon monotonicity violated at s={direction * horizon:.4g} "
                f"(eig {min_eig:.3e})")
        gap = float(np.max(np.abs(cur - prev)))
        prev = cur
        if gap < tol:
            break
    converged = gap < tol
    u0 = prev[int(np.argmin(np.abs(t_grid)))]
    ds = np.empty((t_grid.size, m, m))
    for k, t in enumerate(t_grid):
        a, _, b, _ = joint.pair(t)
        ds[k] = a + b @ u0
    envelope = None
    if problem.bounds is not None and problem.bounds.K1 is not None \
            and problem.bounds.K2 is not None:
        envelope = _envelope_report(problem.bounds, direction, t_grid, prev, ds)
    return LimitSolution(direction=direction, times=t_grid, U=prev, D=ds, U0=u0,
                         horizon_sequence=horizons, convergence_gap=gap,
                         converged=converged, monotone_ok=monotone_ok,
                         envelope=envelope, joint=joint)


def _envelope_report(bounds: PinchBounds, direction: int, t_grid, us, ds) -> dict:
    k1, k2 = bounds.K1, bounds.K2
    slack = 1e-6
    sandwich_ok = True
    for k in range(t_grid.size):
        eig = np.linalg.eigvalsh(us[k])
        if direction == 1:
            sandwich_ok &= eig.max() <= -k2 + slack and eig.min() >= -k1 - slack
        else:
            sandwich_ok &= eig.min() >= k2 - slack and eig.max() <= k1 + slack
    decay_ok = True
    rel_err = 0.0
    for k, t in enumerate(t_grid):
        if direction * t <= 0:
            continue
        sv = np.linalg.svd(ds[k], compute_uv=False)
        lo = math.exp(-k1 * abs(t)) if direction == 1 else math.exp(k2 * abs(t))
        hi = math.exp(-k2 * abs(t)) if direction == 1 else math.exp(k1 * abs(t))
        decay_ok &= sv[-1] >= lo * (1 - 1e-4) and sv[0] <= hi * (1 + 1e-4)
        rel_err = max(rel_err, max(0.0, lo / sv[-1] - 1.0, sv[0] / hi - 1.0))
    return {"sandwich_ok": bool(sandwich_ok), "decay_ok": bool(decay_ok),
            "decay_rel_violation": rel_err}


def integrate_riccati(problem: RiccatiProblem, s0, grid, weight=None,
                      rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Direct integration of S' + S A S + R = 0 along the grid (A defaults to I)."""
    grid = np.asarray(grid, dtype=float)
    m = problem.size
    s0 = np.atleast_2d(np.asarray(s0, dtype=float))

    def rhs(t, flat):
        s = flat.reshape(m, m)
        a = np.eye(m) if weight is None else np.atleast_2d(np.asarray(weight(t), float))
        return (-(s @ a @ s) - problem.curvature_at(t)).ravel()

    res = solve_ivp(rhs, (grid[0], grid[-1]), s0.ravel(), method="DOP853",
                    t_eval=grid, rtol=rtol, atol=atol, dense_output=False)
    if res.status != 0:
        raise AccuracyError(f"Riccati integration failed near t={res.t[-1]:.4g} "
                            "(possible finite-time blowup)")
    return res.y.T.reshape(grid.size, m, m)


def comparison_check(problem1: RiccatiProblem, problem2: RiccatiProblem,
                     s1_0, s2_0, grid, slack: float = 1e-8) -> dict:
    """Ordering report for two Riccati solutions with matched weights A = I.

    On an increasing grid the hypotheses are S2(t0) >= S1(t0) and R1 >= R2
    for t >= t0; on a decreasing grid the mirrored hypotheses R2 >= R1 apply.
    Hypothesis failures are reported as rejected input, not as a failure.
    """
    grid = np.asarray(grid, dtype=float)
    increasing = grid[-1] >= grid[0]
    s1_0 = np.atleast_2d(np.asarray(s1_0, float))
    s2_0 = np.atleast_2d(np.asarray(s2_0, float))
    if np.linalg.eigvalsh(s2_0 - s1_0).min() < -1e-12:
        return {"rejected": True, "reason": "initial ordering S2 >= S1 fails"}
    for t in np.linspace(grid[0], grid[-1], 17):
        gap = problem1.curvature_at(t) - problem2.curvature_at(t)
        if not increasing:
            gap = -gap
        if np.linalg.eigvalsh(gap).min() < -1e-10:
            return {"rejected": True,
                    "reason": f"curvature ordering fails at t={t:.4g}"}
    s1 = integrate_riccati(problem1, s1_0, grid)
    s2 = integrate_riccati(problem2, s2_0, grid)
    worst = min(np.linalg.eigvalsh(s2[k] - s1[k]).min() for k in range(grid.size))
    return {"rejected": False, "min_eig_gap": float(worst),
            "ordered": bool(worst >= -slack), "mirrored": not increasing}


def blowup_certificate(fund: FundamentalSolution, K: float) -> dict:
    """Smallest grid time T with sigma_min(B(t)) >= K for all sampled t >= T."""
    sv = np.array([np.linalg.svd(b, compute_uv=False)[-1] for b in fund.B])
    ok = sv >= K
    t_arr = fund.times
    reached = None
    for k in range(t_arr.size):
        if ok[k:].all():
            reached = float(t_arr[k])
            break
    if reached is None:
        return {"reached": False, "achieved_bound": float(sv[-1]),
                "horizon": float(t_arr[-1])}
    return {"reached": True, "time": reached, "achieved_bound": float(sv[-1])}
