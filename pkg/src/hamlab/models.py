"""Closed-form model systems with analytic ground truth.

Every model bundles a chart atlas (analytic Hamiltonian derivatives, possibly
twisted symplectic structure), a sampling description of its energy shells,
and whatever closed-form oracles exist: flows, monodromies, reduced curvature,
conjugate spacings.  The oracles are what the rest of the test suite measures
the generic pipeline against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError
from .phase import (
    Atlas,
    Chart,
    ChartTransition,
    IntegratorOptions,
    PhasePoint,
    PhaseSystem,
    make_point,
    standard_omega,
)

# linear flows tolerate unbounded steps (dense output stays exact); strongly
# hyperbolic charts need short monodromy factors to keep pullbacks accurate
_LINEAR_OPTS = IntegratorOptions(max_step=float("inf"), monodromy_cap=float("inf"))
_HYPERBOLIC_OPTS = IntegratorOptions(monodromy_cap=100.0)

MODEL_NAMES = (
    "free_particle",
    "harmonic_oscillator",
    "pendulum",
    "flat_torus_geodesic",
    "sphere_geodesic",
    "hyperbolic_plane_geodesic",
    "perturbed_hyperbolic",
    "flat_magnetic",
    "hyperbolic_magnetic",
    "curvature_bump",
)

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(eq=False)
class Model:
    """A named system plus sampling data and analytic oracles."""

    name: str
    params: dict
    atlas: Atlas
    default_energy: float
    box: list
    oracles: dict = field(default_factory=dict)
    ergodic: bool = False
    measure_note: str = ""
    metric_sqrt: Optional[Callable] = None
    sqrt_det_g: Optional[Callable] = None
    potential: Optional[Callable] = None
    default_opts: Optional[IntegratorOptions] = None
    rebase_spacing: Optional[float] = None
    jet_fd_step: Optional[float] = None
    _density_bounds: dict = field(default_factory=dict)

    @property
    def system(self) -> PhaseSystem:
        return self.atlas.system(0)

    @property
    def n(self) -> int:
        return self.atlas.dim_config

    def point(self, coords, chart: int = 0) -> PhasePoint:
        return make_point(self.atlas, coords, chart)

    # -- Liouville sampling on an energy shell --------------------------------

    def _shell_density(self, x: np.ndarray, c: float) -> float:
        v = self.potential(x) if self.potential is not None else 0.0
        gap = 2.0 * (c - v)
        if gap <= 0.0:
            return 0.0
        root = self.sqrt_det_g(x) if self.sqrt_det_g is not None else 1.0
        return root * gap ** ((self.n - 2) / 2.0)

    def _density_bound(self, c: float) -> float:
        key = round(c, 12)
        if key not in self._density_bounds:
            grids = [np.linspace(lo, hi, 41) for lo, hi in self.box]
            mesh = np.meshgrid(*grids, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            best = max(self._shell_density(x, c) for x in pts)
            if best <= 0.0:
                raise DomainError(f"energy level {c} misses the sampling box")
            self._density_bounds[key] = 1.05 * best
        return self._density_bounds[key]

    def sample_level_set(self, c: float, rng: np.random.Generator) -> PhasePoint:
        """Rejection sampling of the Liouville measure on H = c over the chart box."""
        bound = self._density_bound(c)
        for _ in range(100000):
            x = np.array([rng.uniform(lo, hi) for lo, hi in self.box])
            if rng.uniform(0.0, bound) >= self._shell_density(x, c):
                continue
            v = self.potential(x) if self.potential is not None else 0.0
            u = rng.normal(size=self.n)
            u /= np.linalg.norm(u)
            half = np.sqrt(2.0 * (c - v))
            root = self.metric_sqrt(x) if self.metric_sqrt is not None else np.eye(self.n)
            p = half * (root @ u)
            return self.point(np.concatenate([x, p]))
        raise DomainError("rejection sampling failed to accept a point")


# -- conformal kinetic Hamiltonians H = w(x) |p|^2 / 2 ------------------------


def _conformal_system(n, w, w_grad, w_hess, omega=None, omega_jac=None,
                      chart_domain=None, name="chart0"):
    def ham(z):
        x, p = z[:n], z[n:]
        return 0.5 * w(x) * float(p @ p)

    def grad(z):
        x, p = z[:n], z[n:]
        gx = 0.5 * float(p @ p) * w_grad(x)
        return np.concatenate([gx, w(x) * p])

    def hess(z):
        x, p = z[:n], z[n:]
        h = np.zeros((2 * n, 2 * n))
        h[:n, :n] = 0.5 * float(p @ p) * w_hess(x)
        h[:n, n:] = np.outer(w_grad(x), p)
        h[n:, :n] = h[:n, n:].T
        h[n:, n:] = w(x) * np.eye(n)
        return h

    return PhaseSystem(dim_config=n, hamiltonian=ham, grad=grad, hess=hess,
                       omega=omega, omega_jac=omega_jac,
                       chart_domain=chart_domain, name=name)


def _single_chart(system: PhaseSystem, exit_event=None) -> Atlas:
    return Atlas(charts=(Chart(system=system, exit_event=exit_event),))


# -- 1 degree of freedom ------------------------------------------------------


def _free_particle(params):
    sys = PhaseSystem(
        dim_config=1,
        hamiltonian=lambda z: 0.5 * z[1] ** 2,
        grad=lambda z: np.array([0.0, z[1]]),
        hess=lambda z: np.array([[0.0, 0.0], [0.0, 1.0]]),
        name="line",
    )

    def flow_oracle(z0, t):
        return np.array([z0[0] + t * z0[1], z0[1]])

    def monodromy_oracle(z0, t):
        return np.array([[1.0, t], [0.0, 1.0]])

    return Model(
        name="free_particle", params=params, atlas=_single_chart(sys),
        default_opts=_LINEAR_OPTS,
        default_energy=0.5, box=[(-2.0, 2.0)],
        oracles={"flow": flow_oracle, "monodromy": monodromy_oracle,
                 "full_curvature": lambda pt: np.zeros((1, 1))},
        ergodic=False,
        measure_note="level-set sampling exact; trajectory averages drift (no recurrence)",
    )


def _harmonic_oscillator(params):
    sys = PhaseSystem(
        dim_config=1,
        hamiltonian=lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2),
        grad=lambda z: z.copy(),
        hess=lambda z: np.eye(2),
        name="plane",
    )

    def flow_oracle(z0, t):
        c, s = math.cos(t), math.sin(t)
        return np.array([z0[0] * c + z0[1] * s, -z0[0] * s + z0[1] * c])

    def monodromy_oracle(z0, t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, s], [-s, c]])

    return Model(
        name="harmonic_oscillator", params=params, atlas=_single_chart(sys),
        default_energy=0.5, box=[(-1.2, 1.2)],
        potential=lambda x: 0.5 * x[0] ** 2,
        oracles={"flow": flow_oracle, "monodromy": monodromy_oracle,
                 "full_curvature": lambda pt: np.eye(1)},
        ergodic=True,
        measure_note="periodic orbit at fixed energy; time average equals orbit average",
    )


def _pendulum(params):
    sys = PhaseSystem(
        dim_config=1,
        hamiltonian=lambda z: 0.5 * z[1] ** 2 + (1.0 - math.cos(z[0])),
        grad=lambda z: np.array([math.sin(z[0]), z[1]]),
        hess=lambda z: np.array([[math.cos(z[0]), 0.0], [0.0, 1.0]]),
        name="cylinder",
    )
    return Model(
        name="pendulum", params=params, atlas=_single_chart(sys),
        default_energy=0.5, box=[(-math.pi, math.pi)],
        potential=lambda x: 1.0 - math.cos(x[0]),
        oracles={"full_curvature": lambda pt: np.array([[math.cos(pt.coords[0])]])},
        ergodic=True,
        measure_note="librating orbit below the separatrix",
    )


# -- flat torus ---------------------------------------------------------------


def _flat_torus(params):
    n = 2
    sys = _conformal_system(
        n,
        w=lambda x: 1.0,
        w_grad=lambda x: np.zeros(2),
        w_hess=lambda x: np.zeros((2, 2)),
        name="torus-cover",
    )

    def flow_oracle(z0, t):
        return np.concatenate([z0[:2] + t * z0[2:], z0[2:]])

    def monodromy_oracle(z0, t):
        m = np.eye(4)
        m[:2, 2:] = t * np.eye(2)
        return m

    return Model(
        name="flat_torus_geodesic", params=params, atlas=_single_chart(sys),
        default_opts=_LINEAR_OPTS, rebase_spacing=2000.0, jet_fd_step=0.5,
        default_energy=0.5, box=[(0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)],
        sqrt_det_g=lambda x: 1.0,
        metric_sqrt=lambda x: np.eye(2),
        oracles={
            "flow": flow_oracle,
            "monodromy": monodromy_oracle,
            "reduced_curvature": lambda pt: 0.0,
            "conjugate_times": lambda c, T: [],
            "limit_riccati": lambda c: (0.0, 0.0),
            "entropy": lambda c: 0.0,
        },
        ergodic=True,
        measure_note="chart box is a fundamental domain; Liouville sampling exact",
    )


# -- round sphere (two stereographic charts) ----------------------------------


def _sphere(params):
    curv = float(params.get("curvature", 1.0))
    if curv <= 0:
        raise ConfigError("sphere curvature must be positive")
    a = 1.0 / math.sqrt(curv)
    a2, a4 = a * a, a ** 4

    def w(x):
        return (a2 + float(x @ x)) ** 2 / (4.0 * a4)

    def w_grad(x):
        return (a2 + float(x @ x)) * x / a4

    def w_hess(x):
        return ((a2 + float(x @ x)) * np.eye(2) + 2.0 * np.outer(x, x)) / a4

    def domain(z):
        return float(z[:2] @ z[:2]) < (4.0 * a) ** 2

    def make_chart_sys(tag):
        return _conformal_system(2, w, w_grad, w_hess, chart_domain=domain, name=tag)

    def trans_map(z):
        x, p = z[:2], z[2:]
        r2 = float(x @ x)
        xn = a2 * x / r2
        pn = (r2 * p - 2.0 * x * float(x @ p)) / a2
        return np.concatenate([xn, pn])

    def trans_jac(z):
        x, p = z[:2], z[2:]
        r2 = float(x @ x)
        xh = x / math.sqrt(r2)
        dpsi = (a2 / r2) * (np.eye(2) - 2.0 * np.outer(xh, xh))
        dpsim = (r2 / a2) * (np.eye(2) - 2.0 * np.outer(xh, xh))
        dpdx = (2.0 * np.outer(p, x) - 2.0 * float(x @ p) * np.eye(2)
                - 2.0 * np.outer(x, p)) / a2
        jac = np.zeros((4, 4))
        jac[:2, :2] = dpsi
        jac[2:, :2] = dpdx
        jac[2:, 2:] = dpsim
        return jac

    switch_r2 = (1.4 * a) ** 2

    def switch_event(z):
        return float(z[:2] @ z[:2]) - switch_r2

    charts = tuple(
        Chart(
            system=make_chart_sys(f"stereo{i}"),
            switch_event=switch_event,
            transition=ChartTransition(target=1 - i, map=trans_map, jacobian=trans_jac),
        )
        for i in (0, 1)
    )
    atlas = Atlas(charts=charts)

    def embed(z, chart=0):
        """Chart coords -> (position, velocity) on the embedded radius-a sphere."""
        x, p = z[:2], z[2:]
        r2 = float(x @ x)
        den = r2 + a2
        sign = 1.0 if chart == 0 else -1.0
        pos = np.array([2 * a2 * x[0] / den, 2 * a2 * x[1] / den,
                        sign * a * (r2 - a2) / den])
        xdot = w(x) * p
        dxy = 2 * a2 * (np.eye(2) * den - 2.0 * np.outer(x, x)) / den ** 2
        dz = sign * 4.0 * a ** 3 * x / den ** 2
        vel = np.concatenate([dxy @ xdot, [dz @ xdot]])
        return pos, vel

    def project(pos, vel, chart=0):
        sign = 1.0 if chart == 0 else -1.0
        den = a - sign * pos[2] / 1.0
        x = np.array([a * pos[0], a * pos[1]]) / (a - sign * pos[2])
        # velocity by differentiating x = a*(X,Y)/(a - sign*Z)
        d = a - sign * pos[2]
        xdot = (a * vel[:2] * d + sign * a * pos[:2] * vel[2]) / d ** 2
        p = xdot / w(x)
        return np.concatenate([x, p])

    def flow_oracle_embedded(z0, t, chart=0, energy=None):
        pos, vel = embed(z0, chart)
        speed = np.linalg.norm(vel)
        om = speed / a
        if om == 0.0:
            return pos, vel
        post = pos * math.cos(om * t) + (vel / om) * math.sin(om * t)
        velt = -pos * om * math.sin(om * t) + vel * math.cos(om * t)
        return post, velt

    return Model(
        name="sphere_geodesic", params={"curvature": curv}, atlas=atlas,
        default_energy=0.5, box=[(-0.9 * a, 0.9 * a), (-0.9 * a, 0.9 * a)],
        sqrt_det_g=lambda x: 1.0 / w(x),
        metric_sqrt=lambda x: np.eye(2) / math.sqrt(w(x)),
        oracles={
            "embed": embed,
            "project": project,
            "flow_embedded": flow_oracle_embedded,
            "reduced_curvature": lambda pt: 2.0 * pt.energy * curv,
            "conjugate_times": lambda c, T: [
                k * math.pi / math.sqrt(2.0 * c * curv)
                for k in range(1, int(T * math.sqrt(2.0 * c * curv) / math.pi) + 1)
            ],
        },
        ergodic=False,
        measure_note="integrable flow; level-set sampling exact, time averages orbitwise",
    )


# -- hyperbolic half-plane ----------------------------------------------------


def _halfplane_domain(z):
    return z[1] > 1e-8


def _recenter_transition(target: int) -> ChartTransition:
    """Cotangent lift of w -> (w - x)/y, recentering the event point to (0, 1).

    This is an exact symmetry of the half-plane metric (any curvature) and of
    the hyperbolic area form, so Hamiltonian and symplectic structure are
    both preserved; it keeps chart coordinates in a bounded window forever.
    """

    def tmap(z):
        cx, cy = z[0], z[1]
        return np.array([0.0, 1.0, cy * z[2], cy * z[3]])

    def tjac(z):
        cy = z[1]
        jac = np.zeros((4, 4))
        jac[0, 0] = jac[1, 1] = 1.0 / cy
        jac[2, 2] = jac[3, 3] = cy
        return jac

    return ChartTransition(target=target, map=tmap, jacobian=tjac)


def _halfplane_wander(z) -> float:
    """cosh(hyperbolic distance to (0,1)) - 1, a smooth leave-the-window gauge."""
    return (z[0] ** 2 + (z[1] - 1.0) ** 2) / (2.0 * z[1])


_RECENTER_LEVEL = math.cosh(3.0) - 1.0


def _recenter_event(z) -> float:
    return _halfplane_wander(z) - _RECENTER_LEVEL


def _hyperbolic_plane(params):
    curv = float(params.get("curvature", -1.0))
    if curv >= 0:
        raise ConfigError("hyperbolic curvature must be negative")
    a2 = -1.0 / curv
    a = math.sqrt(a2)

    def w(x):
        return x[1] ** 2 / a2

    def w_grad(x):
        return np.array([0.0, 2.0 * x[1] / a2])

    def w_hess(x):
        return np.array([[0.0, 0.0], [0.0, 2.0 / a2]])

    sys = _conformal_system(2, w, w_grad, w_hess, chart_domain=_halfplane_domain,
                            name="halfplane")

    def flow_oracle(z0, t, energy=None):
        x0, y0, px, py = z0
        c = energy if energy is not None else 0.5 * w(z0[:2]) * float(z0[2:] @ z0[2:])
        sigma = math.sqrt(2.0 * c) / a
        xdot = w(z0[:2]) * np.array([px, py])
        theta = math.atan2(xdot[1], xdot[0])
        phi = theta - math.pi / 2.0
        ch, sh = math.cos(phi / 2.0), math.sin(phi / 2.0)
        # Moebius map: scale/translate after rotating about i
        alpha, beta, gamma, delta = ch, sh, -sh, ch
        wpt = complex(0.0, math.exp(sigma * t))
        num = alpha * wpt + beta
        den = gamma * wpt + delta
        zc = num / den
        dzc = (alpha * delta - beta * gamma) / den ** 2 * complex(0.0, sigma * math.exp(sigma * t))
        zc = y0 * zc + x0
        dzc = y0 * dzc
        xy = np.array([zc.real, zc.imag])
        vel = np.array([dzc.real, dzc.imag])
        p = vel / w(xy)
        return np.concatenate([xy, p])

    atlas = Atlas(charts=(Chart(system=sys, switch_event=_recenter_event,
                                transition=_recenter_transition(0)),))
    return Model(
        name="hyperbolic_plane_geodesic", params={"curvature": curv},
        atlas=atlas, default_opts=_HYPERBOLIC_OPTS,
        rebase_spacing=6.0,
        default_energy=0.5, box=[(-2.0, 2.0), (0.4, 3.0)],
        sqrt_det_g=lambda x: 1.0 / w(x),
        metric_sqrt=lambda x: np.eye(2) / math.sqrt(w(x)),
        oracles={
            "flow": flow_oracle,
            "reduced_curvature": lambda pt: 2.0 * pt.energy * curv,
            "conjugate_times": lambda c, T: [],
            "limit_riccati": lambda c: (-math.sqrt(-2.0 * c * curv),
                                        math.sqrt(-2.0 * c * curv)),
            "entropy": lambda c: math.sqrt(-2.0 * c * curv),
            "curvature_range": lambda c: (2.0 * c * curv, 2.0 * c * curv),
        },
        ergodic=False,
        measure_note="universal cover chart; box-restricted Liouville is not invariant, "
                     "constant observables unaffected",
    )


def _perturbed_hyperbolic(params):
    """Hyperbolic metric with a compactly supported conformal bump.

    The bump is a polynomial profile in q = cosh(hyperbolic distance to the
    center) - 1, so it vanishes identically outside a metric ball.  Outside
    that ball the system is exactly hyperbolic; trajectories leave the ball
    permanently (distance to a point is convex along geodesics of
    non-positive curvature), so the atlas hands off to a pure chart with
    isometric recentering for long-time work.
    """
    eps = float(params.get("eps", 0.025))
    radius = float(params.get("radius", 1.2))
    by = float(params.get("center_y", 1.0))
    qmax = math.cosh(radius) - 1.0

    def q_jet(x):
        """q and its first/second derivatives; q = cosh(dist to (0, by)) - 1."""
        xx, yy = x[0], x[1]
        num = xx * xx + (yy - by) ** 2
        q = num / (2.0 * by * yy)
        qx = xx / (by * yy)
        qy = (yy - by) / (by * yy) - q / yy
        qxx = 1.0 / (by * yy)
        qxy = -xx / (by * yy ** 2)
        qyy = 1.0 / yy ** 2 - (qy * yy - q) / yy ** 2
        return q, np.array([qx, qy]), np.array([[qxx, qxy], [qxy, qyy]])

    def u_jet(x):
        q, dq, ddq = q_jet(x)
        s = q / qmax
        if s >= 1.0:
            return 0.0, np.zeros(2), np.zeros((2, 2))
        base = (1.0 - s) ** 6
        d1 = -6.0 * (1.0 - s) ** 5 / qmax
        d2 = 30.0 * (1.0 - s) ** 4 / qmax ** 2
        u = eps * base
        du = eps * d1 * dq
        ddu = eps * (d2 * np.outer(dq, dq) + d1 * ddq)
        return u, du, ddu

    def w(x):
        u, _, _ = u_jet(x)
        return x[1] ** 2 * math.exp(-2.0 * u)

    def w_grad(x):
        u, du, _ = u_jet(x)
        lead = np.array([-2.0 * du[0], 2.0 / x[1] - 2.0 * du[1]])
        return w(x) * lead

    def w_hess(x):
        u, du, ddu = u_jet(x)
        lead = np.array([-2.0 * du[0], 2.0 / x[1] - 2.0 * du[1]])
        dlead = -2.0 * ddu
        dlead[1, 1] += -2.0 / x[1] ** 2
        return w(x) * (np.outer(lead, lead) + dlead)

    bumped = _conformal_system(2, w, w_grad, w_hess, chart_domain=_halfplane_domain,
                               name="halfplane-bumped")
    far = _conformal_system(
        2,
        w=lambda x: x[1] ** 2,
        w_grad=lambda x: np.array([0.0, 2.0 * x[1]]),
        w_hess=lambda x: np.array([[0.0, 0.0], [0.0, 2.0]]),
        chart_domain=_halfplane_domain, name="halfplane-far")

    leave_level = math.cosh(radius + 0.4) - 1.0

    def leave_bump(z):
        return q_jet(z[:2])[0] - leave_level

    def identity_map(z):
        return z.copy()

    def identity_jac(z):
        return np.eye(4)

    atlas = Atlas(charts=(
        Chart(system=bumped, switch_event=leave_bump,
              transition=ChartTransition(target=1, map=identity_map,
                                         jacobian=identity_jac)),
        Chart(system=far, switch_event=_recenter_event,
              transition=_recenter_transition(1)),
    ))

    def gauss_curvature(x, chart=0):
        if chart != 0:
            return -1.0
        u, _, ddu = u_jet(x)
        lap = ddu[0, 0] + ddu[1, 1]
        return math.exp(-2.0 * u) * (-1.0 - x[1] ** 2 * lap)

    return Model(
        name="perturbed_hyperbolic",
        params={"eps": eps, "radius": radius, "center_y": by},
        atlas=atlas, default_opts=_HYPERBOLIC_OPTS,
        rebase_spacing=6.0,
        default_energy=0.5, box=[(-0.5, 0.5), (0.6, 1.6)],
        sqrt_det_g=lambda x: 1.0 / w(x),
        metric_sqrt=lambda x: np.eye(2) / math.sqrt(w(x)),
        oracles={
            "gauss_curvature": gauss_curvature,
            "reduced_curvature": lambda pt: 2.0 * pt.energy
            * gauss_curvature(pt.coords[:2], pt.chart),
        },
        ergodic=False,
        measure_note="variable negative curvature; bump chart hands off to a "
                     "recentering pure chart once left",
    )


# -- magnetic models ----------------------------------------------------------


def _flat_magnetic(params):
    b = float(params.get("field", 1.0))
    if b < 0:
        raise ConfigError("field strength must be non-negative")
    om = standard_omega(2)
    om = om.copy()
    om[:2, :2] = b * _J2

    sys = _conformal_system(
        2,
        w=lambda x: 1.0,
        w_grad=lambda x: np.zeros(2),
        w_hess=lambda x: np.zeros((2, 2)),
        omega=om,
        name="plane-magnetic",
    )

    def flow_oracle(z0, t):
        x0, p0 = z0[:2], z0[2:]
        th = t * b
        rot = np.array([[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]])
        pt = rot @ p0
        if b == 0.0:
            return np.concatenate([x0 + t * p0, p0])
        xt = x0 - (_J2 / b) @ (rot - np.eye(2)) @ p0
        return np.concatenate([xt, pt])

    def monodromy_oracle(z0, t):
        th = t * b
        rot = np.array([[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]])
        m = np.eye(4)
        m[2:, 2:] = rot
        if b == 0.0:
            m[:2, 2:] = t * np.eye(2)
        else:
            m[:2, 2:] = -(_J2 / b) @ (rot - np.eye(2))
        return m

    return Model(
        name="flat_magnetic", params={"field": b}, atlas=_single_chart(sys),
        default_energy=0.5, box=[(-2.0, 2.0), (-2.0, 2.0)],
        sqrt_det_g=lambda x: 1.0,
        metric_sqrt=lambda x: np.eye(2),
        oracles={
            "flow": flow_oracle,
            "monodromy": monodromy_oracle,
            "reduced_curvature": lambda pt: b * b,
            "conjugate_times": lambda c, T: [] if b == 0.0 else [
                k * math.pi / b for k in range(1, int(T * b / math.pi) + 1)
            ],
            "orbit_radius": lambda c: math.sqrt(2.0 * c) / b if b > 0 else math.inf,
        },
        ergodic=False,
        measure_note="circular orbits; Liouville sampling exact on the box",
    )


def _hyperbolic_magnetic(params):
    b = float(params.get("field", 0.5))

    def w(x):
        return x[1] ** 2

    def w_grad(x):
        return np.array([0.0, 2.0 * x[1]])

    def w_hess(x):
        return np.array([[0.0, 0.0], [0.0, 2.0]])

    def omega(z):
        om = standard_omega(2)
        om[:2, :2] = (b / z[1] ** 2) * _J2
        return om

    def omega_jac(z):
        oj = np.zeros((4, 4, 4))
        oj[1, :2, :2] = (-2.0 * b / z[1] ** 3) * _J2
        return oj

    sys = _conformal_system(2, w, w_grad, w_hess, omega=omega, omega_jac=omega_jac,
                            chart_domain=_halfplane_domain, name="halfplane-magnetic")
    atlas = Atlas(charts=(Chart(system=sys, switch_event=_recenter_event,
                                transition=_recenter_transition(0)),))

    return Model(
        name="hyperbolic_magnetic", params={"field": b}, atlas=atlas,
        default_opts=_HYPERBOLIC_OPTS,
        rebase_spacing=6.0,
        default_energy=0.5, box=[(-2.0, 2.0), (0.4, 3.0)],
        sqrt_det_g=lambda x: 1.0 / w(x),
        metric_sqrt=lambda x: np.eye(2) / math.sqrt(w(x)),
        oracles={
            "reduced_curvature": lambda pt: -2.0 * pt.energy + b * b,
        },
        ergodic=False,
        measure_note="twisted structure with the hyperbolic area form",
    )


# -- rotationally symmetric bump of negative curvature ------------------------


def _bump_profile(r1, r2, amp):
    """Radial profile f with f=r for r<=r1, f''=amp*(u(1-u))^6 on [r1,r2]."""
    d = r2 - r1
    ks = np.arange(7)
    coef = np.array([math.comb(6, int(k)) * (-1.0) ** k for k in ks])

    def pol_p(u):
        return float(np.sum(coef * u ** (7 + ks) / (7 + ks)))

    def pol_q(u):
        return float(np.sum(coef * u ** (8 + ks) / ((7 + ks) * (8 + ks))))

    p1, q1 = pol_p(1.0), pol_q(1.0)

    def f(r):
        if r <= r1:
            return r
        u = (r - r1) / d
        if u >= 1.0:
            return r + amp * d * d * (q1 + p1 * (u - 1.0))
        return r + amp * d * d * pol_q(u)

    def fp(r):
        if r <= r1:
            return 1.0
        u = (r - r1) / d
        if u >= 1.0:
            return 1.0 + amp * d * p1
        return 1.0 + amp * d * pol_p(u)

    def fpp(r):
        if r <= r1:
            return 0.0
        u = (r - r1) / d
        if u >= 1.0:
            return 0.0
        return amp * (u * (1.0 - u)) ** 6

    return f, fp, fpp


def _curvature_bump(params):
    r1 = float(params.get("inner_radius", 1.0))
    r2 = float(params.get("outer_radius", 2.0))
    amp = float(params.get("amplitude", 2000.0))
    f, fp, fpp = _bump_profile(r1, r2, amp)

    def ham(z):
        x, p = z[:2], z[2:]
        r = math.hypot(x[0], x[1])
        if r <= r1:
            return 0.5 * float(p @ p)
        h = (r / f(r)) ** 2
        prad = float(p @ x) / r
        return 0.5 * (prad * prad * (1.0 - h) + h * float(p @ p))

    def grad(z):
        x, p = z[:2], z[2:]
        r = math.hypot(x[0], x[1])
        if r <= r1:
            return np.concatenate([np.zeros(2), p])
        xh = x / r
        fr, fpr = f(r), fp(r)
        h = (r / fr) ** 2
        hp = 2.0 * r / fr ** 2 - 2.0 * r * r * fpr / fr ** 3
        prad = float(p @ xh)
        gx = (prad * (1.0 - h) / r) * (p - prad * xh) \
            + 0.5 * (float(p @ p) - prad * prad) * hp * xh
        gp = prad * (1.0 - h) * xh + h * p
        return np.concatenate([gx, gp])

    def domain(z):
        return float(z[:2] @ z[:2]) < 100.0 ** 2

    sys = PhaseSystem(dim_config=2, hamiltonian=ham, grad=grad, hess=None,
                      chart_domain=domain, name="bump-plane")

    def gauss_curvature(x):
        r = math.hypot(x[0], x[1])
        return -fpp(r) / f(r) if r > 0 else 0.0

    def metric_sqrt(x):
        r = math.hypot(x[0], x[1])
        if r <= r1:
            return np.eye(2)
        xh = x / r
        return np.outer(xh, xh) + (f(r) / r) * (np.eye(2) - np.outer(xh, xh))

    return Model(
        name="curvature_bump",
        params={"inner_radius": r1, "outer_radius": r2, "amplitude": amp},
        atlas=_single_chart(sys),
        default_energy=0.5, box=[(-3.0, 3.0), (-3.0, 3.0)],
        sqrt_det_g=lambda x: f(math.hypot(x[0], x[1])) / max(math.hypot(x[0], x[1]), 1e-12),
        metric_sqrt=metric_sqrt,
        oracles={
            "gauss_curvature": gauss_curvature,
            "reduced_curvature": lambda pt: 2.0 * pt.energy
            * gauss_curvature(pt.coords[:2]),
            "profile": (f, fp, fpp),
        },
        ergodic=False,
        measure_note="flat outside the annulus, strictly negative curvature inside",
    )


_BUILDERS = {
    "free_particle": _free_particle,
    "harmonic_oscillator": _harmonic_oscillator,
    "pendulum": _pendulum,
    "flat_torus_geodesic": _flat_torus,
    "sphere_geodesic": _sphere,
    "hyperbolic_plane_geodesic": _hyperbolic_plane,
    "perturbed_hyperbolic": _perturbed_hyperbolic,
    "flat_magnetic": _flat_magnetic,
    "hyperbolic_magnetic": _hyperbolic_magnetic,
    "curvature_bump": _curvature_bump,
}


def instantiate(name: str, params: dict | None = None) -> Model:
    """Build a registered model; raises ConfigError for unknown names/parameters."""
    if name not in _BUILDERS:
        raise ConfigError(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    return _BUILDERS[name](dict(params or {}))
