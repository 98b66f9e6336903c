"""Phase-space systems in coordinate charts and their flows.

A system lives in one or more charts on R^(2n) with coordinates
(x_1..x_n, p_1..p_n).  Each chart carries a Hamiltonian with derivatives, a
(possibly twisted) symplectic matrix, and a frame spanning the vertical
distribution.  The `Trajectory` engine integrates the flow jointly with its
linearization and stitches segments across chart transitions.  Because frame
bases are chart-local, every segment also integrates a short overlap past its
ends so that frame quantities can be evaluated in a single chart context
around any time; the frame machinery downstream absorbs the orthogonal basis
jump at a switch into its gauge.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import AccuracyError, DomainError, StiffnessError, StructuralError
from .numutil import grad_fd, jacobian_fd, symmetrize


def standard_omega(n: int) -> np.ndarray:
    """Matrix of sum_i dp_i ^ dx_i acting as omega(u, v) = u @ Om @ v."""
    om = np.zeros((2 * n, 2 * n))
    om[:n, n:] = -np.eye(n)
    om[n:, :n] = np.eye(n)
    return om


def coordinate_vertical_frame(n: int) -> np.ndarray:
    """Columns spanning the momentum fibers span{d/dp_i}."""
    v = np.zeros((2 * n, n))
    v[n:, :] = np.eye(n)
    return v


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances for the adaptive integrator (order-8 embedded Runge-Kutta).

    `monodromy_cap` bounds the Frobenius norm of any one segment's variational
    solution; beyond it the trajectory starts a fresh segment so that inverse
    monodromies are applied as products of well-conditioned factors.
    """

    rtol: float = 1e-11
    atol: float = 1e-12
    max_step: float = 0.25
    monodromy_cap: float = 1e4

    def loosened(self, tol: float) -> "IntegratorOptions":
        return replace(self, rtol=max(self.rtol, tol), atol=max(self.atol, 0.01 * tol))


@dataclass(frozen=True, eq=False)
class PhaseSystem:
    """One chart of a Hamiltonian system.

    `omega` may be None (standard form), a constant matrix, or a callable
    z -> (2n, 2n) for twisted structures.  `omega_jac`, when given, returns
    the stacked partials d(omega)/dz_k with shape (2n, 2n, 2n).
    Missing derivative callbacks fall back to 4th-order central differences.
    """

    dim_config: int
    hamiltonian: Callable[[np.ndarray], float]
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    omega: object = None
    omega_jac: Optional[Callable] = None
    vertical_frame: Optional[Callable] = None
    chart_domain: Optional[Callable[[np.ndarray], bool]] = None
    name: str = "chart0"

    @property
    def dim_phase(self) -> int:
        return 2 * self.dim_config

    def omega_matrix(self, z) -> np.ndarray:
        if self.omega is None:
            return standard_omega(self.dim_config)
        if callable(self.omega):
            return np.asarray(self.omega(np.asarray(z, dtype=float)), dtype=float)
        return np.asarray(self.omega, dtype=float)

    @property
    def omega_is_constant(self) -> bool:
        return self.omega is None or not callable(self.omega)

    def energy(self, z) -> float:
        return float(self.hamiltonian(np.asarray(z, dtype=float)))

    def grad_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(z), dtype=float)
        return grad_fd(self.hamiltonian, z)

    def hess_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(z), dtype=float)
        h, _ = symmetrize(jacobian_fd(self.grad_at, z))
        return h

    def vertical_at(self, z) -> np.ndarray:
        if self.vertical_frame is None:
            return coordinate_vertical_frame(self.dim_config)
        return np.asarray(self.vertical_frame(np.asarray(z, dtype=float)), dtype=float)

    def in_domain(self, z) -> bool:
        if self.chart_domain is None:
            return True
        return bool(self.chart_domain(np.asarray(z, dtype=float)))

    def vector_field(self, z) -> np.ndarray:
        """Solves omega(X, .) = -dH(.), i.e. Om @ X = grad H."""
        z = np.asarray(z, dtype=float)
        om = self.omega_matrix(z)
        try:
            return np.linalg.solve(om, self.grad_at(z))
        except np.linalg.LinAlgError as exc:
            raise StructuralError(f"singular symplectic matrix at {z}") from exc

    def vector_field_jacobian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        om = self.omega_matrix(z)
        hess = self.hess_at(z)
        if self.omega_is_constant:
            return np.linalg.solve(om, hess)
        if self.omega_jac is not None:
            x = np.linalg.solve(om, self.grad_at(z))
            oj = np.asarray(self.omega_jac(z), dtype=float)
            rhs = hess - np.einsum("kab,b->ak", oj, x)
            return np.linalg.solve(om, rhs)
        return jacobian_fd(self.vector_field, z)


@dataclass(frozen=True)
class ChartTransition:
    target: int
    map: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Chart:
    system: PhaseSystem
    switch_event: Optional[Callable[[np.ndarray], float]] = None
    transition: Optional[ChartTransition] = None
    exit_event: Optional[Callable[[np.ndarray], float]] = None


@dataclass(frozen=True)
class Atlas:
    charts: tuple

    @property
    def dim_config(self) -> int:
        return self.charts[0].system.dim_config

    def system(self, chart: int = 0) -> PhaseSystem:
        return self.charts[chart].system


def as_atlas(obj) -> Atlas:
    if isinstance(obj, Atlas):
        return obj
    if isinstance(obj, PhaseSystem):
        return Atlas(charts=(Chart(system=obj),))
    atlas = getattr(obj, "atlas", None)
    if isinstance(atlas, Atlas):
        return atlas
    raise TypeError(f"cannot interpret {type(obj)!r} as a chart atlas")


def chart_system(obj, point) -> PhaseSystem:
    atlas = as_atlas(obj)
    return atlas.charts[point.chart].system


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A phase point with cached energy; `chart` indexes the owning atlas chart."""

    coords: np.ndarray
    energy: float
    chart: int = 0

    @property
    def n(self) -> int:
        return self.coords.size // 2

    @property
    def position(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def momentum(self) -> np.ndarray:
        return self.coords[self.n:]


def make_point(obj, coords, chart: int = 0, energy: float | None = None) -> PhasePoint:
    """Validated phase point; checks chart membership and energy consistency."""
    atlas = as_atlas(obj)
    sys = atlas.system(chart)
    coords = np.asarray(coords, dtype=float).copy()
    if coords.size != sys.dim_phase:
        raise DomainError(f"expected {sys.dim_phase} coordinates, got {coords.size}")
    if not sys.in_domain(coords):
        raise DomainError(f"point {coords} outside chart domain")
    h = sys.energy(coords)
    if energy is not None and abs(h - energy) > 1e-12 * max(1.0, abs(h)):
        raise DomainError(f"declared energy {energy} inconsistent with H={h}")
    return PhasePoint(coords=coords, energy=h, chart=chart)


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: PhasePoint
    components: np.ndarray


def hamiltonian_vector_field(obj, alpha: PhasePoint) -> TangentVector:
    """The field X with omega(X, .) = -dH(.); standard form gives (H_p, -H_x)."""
    sys = chart_system(obj, alpha)
    if not sys.in_domain(alpha.coords):
        raise DomainError("point outside chart domain")
    return TangentVector(base=alpha, components=sys.vector_field(alpha.coords))


def monotone_form(obj, alpha: PhasePoint, tol: float = 1e-10):
    """Matrix of omega([X, V_i], V_j) on the vertical frame, with convexity flag.

    The frame vectors are extended coordinate-constantly, so [X, V] = -DX V.
    Returns (matrix, positive_definite).
    """
    sys = chart_system(obj, alpha)
    z = alpha.coords
    om = sys.omega_matrix(z)
    v = sys.vertical_at(z)
    dx = sys.vector_field_jacobian(z)
    mf = -(dx @ v).T @ om @ v
    sym, asym = symmetrize(mf)
    if asym > tol:
        raise AccuracyError(f"monotone form asymmetric by {asym:.3e} (tol {tol:.1e})")
    positive = bool(np.all(np.linalg.eigvalsh(sym) > 0.0))
    return sym, positive


class _Seg:
    """One chart-coherent piece of a trajectory.

    Official span is [t0, t1] (t1 < t0 on the backward side).  `back` and
    `ext` are short overlap solutions covering up to `overlap` beyond each
    end, used for chart-pinned frame evaluation near switches.
    """

    __slots__ = ("t0", "t1", "chart", "sol", "back", "ext", "prefix", "prefix_inv",
                 "factor")

    def __init__(self, t0, t1, chart, sol, prefix, prefix_inv, factor):
        self.t0 = t0
        self.t1 = t1
        self.chart = chart
        self.sol = sol
        self.back = None
        self.ext = None
        self.prefix = prefix
        self.prefix_inv = prefix_inv
        self.factor = factor

    def covers(self, t: float) -> bool:
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        return lo <= t <= hi

    def raw(self, t: float) -> np.ndarray:
        if self.covers(t):
            return self.sol(t)
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        # near-end lookup through the overlap solutions
        for piece in (self.back, self.ext):
            if piece is not None:
                plo, phi = piece[0]
                if plo <= t <= phi:
                    return piece[1](t)
        raise DomainError(
            f"time {t:.6g} outside pinned coverage of segment [{lo:.6g}, {hi:.6g}]"
        )


class Trajectory:
    """Flow line through a base point with dense state/monodromy evaluation.

    Lazy in both time directions: `ensure(t)` extends integration as needed.
    Chart switches start new segments whose monodromy prefixes include the
    transition Jacobians.  `ctx` arguments pin frame evaluation to the chart
    of the segment containing the context time.
    """

    overlap = 0.5

    def __init__(self, obj, start: PhasePoint, opts: IntegratorOptions | None = None):
        self.atlas = as_atlas(obj)
        self.opts = opts or getattr(obj, "default_opts", None) or IntegratorOptions()
        self.base = self._normalize_start(start)
        self._fwd: list[_Seg] = []
        self._bwd: list[_Seg] = []
        self._fwd_ends: list[float] = []
        self._bwd_ends: list[float] = []
        self.truncated_fwd = False
        self.truncated_bwd = False
        n2 = self.base.coords.size
        eye = np.eye(n2)
        self._cont_fwd = (0.0, self.base.coords.copy(), self.base.chart, eye, eye,
                          None, eye)
        self._cont_bwd = (0.0, self.base.coords.copy(), self.base.chart, eye, eye,
                          None, eye)
        sys0 = self.atlas.system(self.base.chart)
        self.base_omega = sys0.omega_matrix(self.base.coords)
        self._base_energy = self.base.energy
        self.energy_drift = 0.0
        self.symplectic_drift = 0.0
        self.switch_times: list[float] = []
        self._eval_cache: dict = {}
        self._gram_cache: dict = {}

    def _normalize_start(self, start: PhasePoint) -> PhasePoint:
        # keep the base out of switch zones so stencils around t=0 stay in-chart
        z, chart = start.coords.copy(), start.chart
        for _ in range(4):
            c = self.atlas.charts[chart]
            if c.switch_event is None or c.transition is None or c.switch_event(z) <= 0:
                break
            z = np.asarray(c.transition.map(z), dtype=float)
            chart = c.transition.target
        if chart == start.chart and np.array_equal(z, start.coords):
            return start
        sys = self.atlas.system(chart)
        return PhasePoint(coords=z, energy=sys.energy(z), chart=chart)

    # -- integration ----------------------------------------------------------

    def _rhs(self, sys: PhaseSystem, n2: int):
        def rhs(_t, y):
            z = y[:n2]
            m = y[n2:].reshape(n2, n2)
            xdot = sys.vector_field(z)
            mdot = sys.vector_field_jacobian(z) @ m
            return np.concatenate([xdot, mdot.ravel()])

        return rhs

    def _solve(self, sys, y0, t0, t1, events=None):
        if t1 == t0:
            t1 = t0 + np.copysign(1e-12, t1 - t0 if t1 != t0 else 1.0)
        res = solve_ivp(
            self._rhs(sys, self.base.coords.size), (t0, t1), y0, method="DOP853",
            dense_output=True, rtol=self.opts.rtol, atol=self.opts.atol,
            max_step=self.opts.max_step, events=events,
        )
        if res.status == -1:
            raise StiffnessError(f"integrator failed near t={res.t[-1]:.6g}: {res.message}")
        return res

    def _extend(self, t_target: float) -> None:
        forward = t_target >= 0.0
        if (forward and self.truncated_fwd) or (not forward and self.truncated_bwd):
            raise DomainError(f"trajectory truncated before t={t_target:.6g}")
        cont = self._cont_fwd if forward else self._cont_bwd
        t0, z0, chart, prefix, prefix_inv, back_piece, factor = cont
        n2 = z0.size
        chart_obj = self.atlas.charts[chart]
        sys = chart_obj.system
        events, kinds = [], []
        if chart_obj.switch_event is not None:
            events.append(_wrap_event(chart_obj.switch_event, n2))
            kinds.append("switch")
        if chart_obj.exit_event is not None:
            events.append(_wrap_event(chart_obj.exit_event, n2))
            kinds.append("exit")
        cap2 = self.opts.monodromy_cap ** 2
        events.append(_monodromy_event(n2, cap2))
        kinds.append("renorm")
        y0 = np.concatenate([z0, np.eye(n2).ravel()])
        res = self._solve(sys, y0, t0, t_target, events=events)
        t_end = res.t[-1]
        seg = _Seg(t0, t_end, chart, res.sol, prefix, prefix_inv, factor)
        seg.back = back_piece
        (self._fwd if forward else self._bwd).append(seg)
        (self._fwd_ends if forward else self._bwd_ends).append(abs(t_end))
        self._update_drift(seg)
        fired = [] if res.status != 1 else \
            [k for k, arr in zip(kinds, res.t_events) if arr.size]
        if "switch" in fired:
            self._switch(seg, forward)
            return
        if "exit" in fired:
            if forward:
                self.truncated_fwd = True
            else:
                self.truncated_bwd = True
            return
        # normal completion or a monodromy renormalization boundary
        y_end = res.sol(t_end)
        m_end = y_end[n2:].reshape(n2, n2)
        new_cont = (t_end, y_end[:n2], chart, m_end @ prefix,
                    prefix_inv @ np.linalg.inv(m_end), None, m_end)
        if forward:
            self._cont_fwd = new_cont
        else:
            self._cont_bwd = new_cont

    def _switch(self, seg: _Seg, forward: bool) -> None:
        chart_obj = self.atlas.charts[seg.chart]
        trans = chart_obj.transition
        if trans is None:
            raise StructuralError("switch event fired but chart has no transition")
        n2 = self.base.coords.size
        tau = seg.t1
        step = self.overlap if forward else -self.overlap
        y_tau = seg.sol(tau)
        # overlap continuation of the old chart past the switch
        ext = self._solve(chart_obj.system, y_tau, tau, tau + step)
        seg.ext = ((min(tau, tau + step), max(tau, tau + step)), ext.sol)
        z_old = y_tau[:n2]
        m_seg = y_tau[n2:].reshape(n2, n2)
        jac = np.asarray(trans.jacobian(z_old), dtype=float)
        z_new = np.asarray(trans.map(z_old), dtype=float)
        prefix = jac @ m_seg @ seg.prefix
        prefix_inv = seg.prefix_inv @ np.linalg.inv(m_seg) @ np.linalg.inv(jac)
        # the next segment's backward overlap, integrated in the new chart
        y_new = np.concatenate([z_new, np.eye(n2).ravel()])
        back = self._solve(self.atlas.system(trans.target), y_new, tau, tau - step)
        back_piece = ((min(tau, tau - step), max(tau, tau - step)), back.sol)
        cont = (tau, z_new, trans.target, prefix, prefix_inv, back_piece,
                jac @ m_seg)
        if forward:
            self._cont_fwd = cont
        else:
            self._cont_bwd = cont
        self.switch_times.append(tau)

    def ensure(self, t: float) -> None:
        guard = 0
        if t >= 0.0:
            while (not self._fwd or self._fwd[-1].t1 < t) and not self.truncated_fwd:
                self._extend(max(t, 1e-12))
                guard += 1
                if guard > 100000:
                    raise StiffnessError("chart switching failed to make progress")
            if self.truncated_fwd and (not self._fwd or self._fwd[-1].t1 < t):
                raise DomainError(f"trajectory truncated before t={t:.6g}")
        else:
            while (not self._bwd or self._bwd[-1].t1 > t) and not self.truncated_bwd:
                self._extend(t)
                guard += 1
                if guard > 100000:
                    raise StiffnessError("chart switching failed to make progress")
            if self.truncated_bwd and (not self._bwd or self._bwd[-1].t1 > t):
                raise DomainError(f"trajectory truncated before t={t:.6g}")

    @property
    def reach_fwd(self) -> float:
        return self._fwd[-1].t1 if self._fwd else 0.0

    @property
    def reach_bwd(self) -> float:
        return self._bwd[-1].t1 if self._bwd else 0.0

    def _segment_at(self, t: float) -> _Seg:
        self.ensure(t)
        segs = self._fwd if t >= 0.0 else self._bwd
        ends = self._fwd_ends if t >= 0.0 else self._bwd_ends
        if not segs:
            raise DomainError("empty trajectory")
        idx = min(bisect.bisect_left(ends, abs(t)), len(segs) - 1)
        while idx + 1 < len(segs) and abs(segs[idx].t1) < abs(t):
            idx += 1
        return segs[idx]

    def _update_drift(self, seg: _Seg) -> None:
        n2 = self.base.coords.size
        sys = self.atlas.system(seg.chart)
        for t in np.linspace(seg.t0, seg.t1, 5):
            y = seg.sol(t)
            z = y[:n2]
            m = y[n2:].reshape(n2, n2) @ seg.prefix
            self.energy_drift = max(self.energy_drift, abs(sys.energy(z) - self._base_energy))
            om = sys.omega_matrix(z)
            self.symplectic_drift = max(
                self.symplectic_drift,
                float(np.max(np.abs(m.T @ om @ m - self.base_omega))),
            )

    # -- evaluation ------------------------------------------------------------

    def _resolve(self, t: float, ctx: float | None):
        """Segment to evaluate `t` with, honoring a chart-pinning context time."""
        seg_t = self._segment_at(t) if t != 0.0 else None
        if ctx is None or t == ctx:
            return seg_t
        seg_ctx = self._segment_at(ctx) if ctx != 0.0 else None
        chart_t = seg_t.chart if seg_t is not None else self.base.chart
        chart_ctx = seg_ctx.chart if seg_ctx is not None else self.base.chart
        if chart_t == chart_ctx:
            return seg_t
        # cross-chart: walk from the context toward t while the chart persists;
        # the last same-chart segment carries the overlap piece covering t
        ordered = list(reversed(self._bwd)) + self._fwd
        if seg_ctx is None:
            idx = len(self._bwd) - (0 if t >= 0.0 else 1)
            idx = min(max(idx, 0), len(ordered) - 1)
        else:
            idx = next(i for i, s in enumerate(ordered) if s is seg_ctx)
        step = 1 if t > (ctx if ctx is not None else 0.0) else -1
        while (not ordered[idx].covers(t)
               and 0 <= idx + step < len(ordered)
               and ordered[idx + step].chart == chart_ctx):
            idx += step
        return ordered[idx]

    def _eval(self, t: float, ctx: float | None = None):
        key = (t, t if ctx is None else ctx)
        hit = self._eval_cache.get(key)
        if hit is not None:
            return hit
        seg = self._resolve(t, ctx)
        n2 = self.base.coords.size
        if seg is None:
            z = self.base.coords.copy()
            eye = np.eye(n2)
            out = (z, self.base.chart, eye, eye)
        else:
            y = seg.raw(t)
            z = y[:n2]
            m_seg = y[n2:].reshape(n2, n2)
            out = (z, seg.chart, m_seg @ seg.prefix,
                   seg.prefix_inv @ np.linalg.inv(m_seg))
        if len(self._eval_cache) > 20000:
            self._eval_cache.clear()
        self._eval_cache[key] = out
        return out

    def state(self, t: float, ctx: float | None = None):
        if t == 0.0 and ctx is None:
            return self.base.coords.copy(), self.base.chart
        z, chart, _, _ = self._eval(t, ctx)
        return z.copy(), chart

    def point_at(self, t: float) -> PhasePoint:
        z, chart = self.state(t)
        sys = self.atlas.system(chart)
        return PhasePoint(coords=z, energy=sys.energy(z), chart=chart)

    def system_at(self, t: float, ctx: float | None = None) -> PhaseSystem:
        _, chart, _, _ = self._eval(t, ctx)
        return self.atlas.system(chart)

    def monodromy(self, t: float, ctx: float | None = None) -> np.ndarray:
        if t == 0.0 and ctx is None:
            return np.eye(self.base.coords.size)
        return self._eval(t, ctx)[2]

    def monodromy_inv(self, t: float, ctx: float | None = None) -> np.ndarray:
        if t == 0.0 and ctx is None:
            return np.eye(self.base.coords.size)
        return self._eval(t, ctx)[3]

    def transfer(self, t1: float, t2: float) -> np.ndarray:
        """dphi from time t1 to t2 as a product of segmentwise factors.

        Avoids forming M(t2) M(t1)^{-1} from the full monodromies, whose
        accumulated scales would cancel catastrophically on hyperbolic flows.
        """
        n2 = self.base.coords.size
        if t1 == t2:
            return np.eye(n2)
        if (t1 < 0.0) != (t2 < 0.0) and t1 != 0.0 and t2 != 0.0:
            return self.transfer(0.0, t2) @ self.transfer(t1, 0.0)
        if abs(t2) < abs(t1):
            return np.linalg.inv(self.transfer(t2, t1))
        self.ensure(t2)
        segs = self._fwd if max(t1, t2, key=abs) >= 0 else self._bwd
        seg1 = self._segment_at(t1) if t1 != 0.0 else segs[0]
        seg2 = self._segment_at(t2)
        i1 = next(i for i, s in enumerate(segs) if s is seg1)
        i2 = next(i for i, s in enumerate(segs) if s is seg2)
        y1 = seg1.raw(t1)
        out = np.linalg.inv(y1[n2:].reshape(n2, n2))
        for k in range(i1 + 1, i2 + 1):
            out = segs[k].factor @ out
        y2 = seg2.raw(t2)
        return y2[n2:].reshape(n2, n2) @ out

    def vertical_pulled(self, t: float, ctx: float | None = None) -> np.ndarray:
        """Frame of the Jacobi curve: columns of dphi_t^{-1} V(phi_t)."""
        z, chart, _, minv = self._eval(t, ctx)
        v = self.atlas.system(chart).vertical_at(z)
        return minv @ v

    def gram(self, t: float, ctx: float | None = None) -> np.ndarray:
        """Canonical form on the Jacobi-curve frame (pulled-back monotone form)."""
        key = (t, t if ctx is None else ctx)
        hit = self._gram_cache.get(key)
        if hit is not None:
            return hit
        z, chart, _, _ = self._eval(t, ctx)
        sys = self.atlas.system(chart)
        om = sys.omega_matrix(z)
        v = sys.vertical_at(z)
        dx = sys.vector_field_jacobian(z)
        mf = -(dx @ v).T @ om @ v
        out = 0.5 * (mf + mf.T)
        if len(self._gram_cache) > 20000:
            self._gram_cache.clear()
        self._gram_cache[key] = out
        return out


def _wrap_event(g, n2: int):
    def ev(_t, y):
        return g(y[:n2])

    ev.terminal = True
    ev.direction = 1.0
    return ev


def _monodromy_event(n2: int, cap2: float):
    def ev(_t, y):
        block = y[n2:]
        return float(block @ block) - cap2

    ev.terminal = True
    ev.direction = 1.0
    return ev


@dataclass(eq=False)
class FlowSegment:
    """Grid snapshot of a flow line with monodromies and drift diagnostics."""

    base: PhasePoint
    times: np.ndarray
    states: np.ndarray
    charts: np.ndarray
    monodromies: Optional[np.ndarray]
    energy_drift: float
    symplectic_drift: float
    truncated: bool = False
    trajectory: Optional[Trajectory] = None

    def state_at(self, k: int) -> PhasePoint:
        return self.trajectory.point_at(self.times[k])


def flow(obj, alpha: PhasePoint, T: float, tol: float = 1e-10,
         node_step: float | None = None, with_monodromy: bool = True,
         opts: IntegratorOptions | None = None) -> FlowSegment:
    """Integrate the flow up to time T (either sign) on a uniform grid.

    The variational equation is integrated jointly with the base point, so
    monodromies come from the same dense output.  Chart exits truncate the
    segment and set the `truncated` flag instead of extrapolating.
    """
    opts = opts or IntegratorOptions().loosened(tol)
    traj = Trajectory(obj, alpha, opts)
    try:
        traj.ensure(T)
        reached = T
    except DomainError:
        reached = traj.reach_fwd if T >= 0 else traj.reach_bwd
    if node_step is None:
        node_step = min(0.1, abs(T) / 50.0) if T != 0.0 else 0.1
    count = min(4001, max(2, int(round(abs(reached) / max(node_step, 1e-12))) + 1))
    times = np.linspace(0.0, reached, count)
    n2 = alpha.coords.size
    states = np.empty((count, n2))
    charts = np.empty(count, dtype=int)
    monos = np.empty((count, n2, n2)) if with_monodromy else None
    for k, t in enumerate(times):
        z, chart = traj.state(t)
        states[k] = z
        charts[k] = chart
        if with_monodromy:
            monos[k] = traj.monodromy(t)
    return FlowSegment(
        base=traj.base, times=times, states=states, charts=charts, monodromies=monos,
        energy_drift=traj.energy_drift, symplectic_drift=traj.symplectic_drift,
        truncated=(traj.truncated_fwd if T >= 0 else traj.truncated_bwd),
        trajectory=traj,
    )


def linearized_flow(obj, seg: FlowSegment, tol: float = 1e-10) -> FlowSegment:
    """Fill/verify monodromies of a segment; errors if symplecticity degrades."""
    traj = seg.trajectory
    if traj is None:
        raise StructuralError("segment has no backing trajectory")
    if seg.monodromies is None:
        n2 = seg.base.coords.size
        monos = np.empty((len(seg.times), n2, n2))
        for k, t in enumerate(seg.times):
            monos[k] = traj.monodromy(t)
        seg.monodromies = monos
    residual = traj.symplectic_drift
    if residual > 100.0 * tol:
        raise AccuracyError(
            f"symplecticity residual {residual:.3e} exceeds 100x tol {tol:.1e}"
        )
    seg.symplectic_drift = residual
    return seg
