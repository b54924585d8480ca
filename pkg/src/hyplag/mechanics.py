"""Mechanical Lagrangians on the disk, their flow, and action evaluation.

The Lagrangian is L(x, v, t) = (1/2) ||v||^2 - V(x, t) with the kinetic
norm taken in the hyperbolic metric itself and V <= 0 a group-equivariant
time-periodic potential (or absent).  Since V <= 0, L >= (1/2) ||v||^2
pointwise, so the superquadratic constant is C = 1/2 exactly.

In the coordinate chart the equation of motion reads

    z'' = -2 conj(z) z'^2 / (1 - |z|^2)  -  grad V(z, t),

the first term being the geodesic spray of the conformal metric and grad V
the metric gradient (Euclidean gradient divided by lambda^2).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import diskmath as dm
from .curves import SampledCurve
from .errors import BoundaryOverflowError, ConvergenceError
from .geometry import DiskPoint, TangentVec


@dataclass(frozen=True)
class MechanicalLagrangian:
    """Kinetic-minus-potential Lagrangian; potential None means free motion."""

    potential: object = None

    @property
    def autonomous(self):
        return self.potential is None or self.potential.time_amplitude == 0.0

    @property
    def v_min(self):
        return 0.0 if self.potential is None else self.potential.v_min

    def potential_z(self, z, t):
        if self.potential is None:
            return np.zeros(np.shape(np.atleast_1d(z)))
        return self.potential.value_z(z, t)

    def potential_and_grad_z(self, z, t):
        if self.potential is None:
            z = np.atleast_1d(np.asarray(z, dtype=complex))
            return np.zeros(z.shape), np.zeros(z.shape, dtype=complex)
        return self.potential.value_and_grad_z(z, t)


@dataclass(frozen=True)
class ELState:
    """Point of the extended phase space (position, velocity, time)."""

    position: DiskPoint
    velocity: TangentVec
    time: float = 0.0

    def __post_init__(self):
        if self.velocity.base != self.position:
            raise ValueError("velocity must be based at the position")

    @classmethod
    def from_raw(cls, z, v, t=0.0):
        p = DiskPoint(complex(z))
        return cls(p, TangentVec(p, complex(v)), float(t))


def lagrangian_value(L: MechanicalLagrangian, state: ELState) -> float:
    """(1/2) ||v||^2 - V(x, t)."""
    kin = 0.5 * state.velocity.norm ** 2
    return kin - float(L.potential_z(state.position.z, state.time)[0])


def energy(L: MechanicalLagrangian, state: ELState) -> float:
    """E = (1/2) ||v||^2 + V(x, t); conserved only when the potential is autonomous."""
    kin = 0.5 * state.velocity.norm ** 2
    return kin + float(L.potential_z(state.position.z, state.time)[0])


def _el_rhs(L, z, w, t):
    """Right-hand side (z', w') of the second-order equation in the chart."""
    one_minus = 1.0 - (z.real * z.real + z.imag * z.imag)
    spray = -2.0 * z.conjugate() * w * w / one_minus
    if L.potential is None:
        return w, spray
    g = complex(L.potential.grad_z(z, t)[0])
    return w, spray - g


def el_vector_field(L: MechanicalLagrangian, state: ELState):
    """Velocity and coordinate acceleration at a state, as tangent data."""
    z = state.position.z
    if abs(z) >= 1.0 - 1e-9:
        raise BoundaryOverflowError("state too close to the boundary")
    v, a = _el_rhs(L, z, state.velocity.v, state.time)
    return state.velocity, TangentVec(state.position, a)


@dataclass(frozen=True)
class StepControl:
    """Tolerances of the adaptive fourth-order integrator."""

    tol: float = 1e-10
    h_init: float = 1e-2
    h_min: float = 1e-10
    h_max: float = 0.05


@dataclass
class IntegrationStats:
    steps: int = 0
    rejected: int = 0
    max_error_estimate: float = 0.0
    energy_drift: float | None = None


@dataclass
class IntegrationResult:
    curve: SampledCurve
    final_state: ELState
    stats: IntegrationStats

    def summary(self):
        s = {
            "steps": self.stats.steps,
            "rejected": self.stats.rejected,
            "max_error_estimate": self.stats.max_error_estimate,
        }
        if self.stats.energy_drift is not None:
            s["energy_drift"] = self.stats.energy_drift
        return s


def _rk4(L, z, w, t, h):
    k1z, k1w = _el_rhs(L, z, w, t)
    k2z, k2w = _el_rhs(L, z + 0.5 * h * k1z, w + 0.5 * h * k1w, t + 0.5 * h)
    k3z, k3w = _el_rhs(L, z + 0.5 * h * k2z, w + 0.5 * h * k2w, t + 0.5 * h)
    k4z, k4w = _el_rhs(L, z + h * k3z, w + h * k3w, t + h)
    zn = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    wn = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return zn, wn


def integrate_el(L: MechanicalLagrangian, state: ELState, T, control=None):
    """Integrate the flow for time T (either sign), classical RK4 with
    step-doubling error control and step halving near the boundary.

    Returns the sampled trajectory with velocities, the final state, and the
    step statistics (energy drift included when the potential is autonomous).
    """
    if not math.isfinite(T):
        raise ValueError("T must be finite")
    ctrl = control or StepControl()
    z, w, t = state.position.z, state.velocity.v, state.time
    t_end = t + T
    sign = 1.0 if T >= 0 else -1.0
    h = sign * ctrl.h_init

    ts, zs, ws = [t], [z], [w]
    stats = IntegrationStats()
    while (t_end - t) * sign > 1e-14:
        if abs(h) > ctrl.h_max:
            h = sign * ctrl.h_max
        if (t + h - t_end) * sign > 0:
            h = t_end - t
        z1, w1 = _rk4(L, z, w, t, h)
        zh, wh = _rk4(L, z, w, t, 0.5 * h)
        z2, w2 = _rk4(L, zh, wh, t + 0.5 * h, 0.5 * h)
        ok = np.isfinite([z1, w1, z2, w2]).all() and abs(z2) < 1.0 - dm.GUARD
        if ok:
            lam = 2.0 / (1.0 - abs(z) ** 2)
            err = max(lam * abs(z2 - z1), lam * abs(w2 - w1)) / 15.0
        if not ok or err > ctrl.tol:
            stats.rejected += 1
            h *= 0.5
            if abs(h) < ctrl.h_min:
                if not ok:
                    raise BoundaryOverflowError(
                        "trajectory reached the numerical boundary"
                    )
                raise ConvergenceError("step size underflow in integrate_el")
            continue
        z, w, t = z2, w2, t + h
        ts.append(t)
        zs.append(z)
        ws.append(w)
        stats.steps += 1
        stats.max_error_estimate = max(stats.max_error_estimate, err)
        if err < ctrl.tol / 64.0:
            h *= 2.0

    if len(ts) == 1:  # T == 0: a single instant, padded to a valid curve
        final = ELState.from_raw(z, w, t)
        curve = SampledCurve([t, t + 1e-12], [z, z + 1e-12 * w], [w, w])
        return IntegrationResult(curve, final, stats)

    order = np.argsort(ts) if sign < 0 else slice(None)
    ts = np.asarray(ts)[order]
    zs = np.asarray(zs)[order]
    ws = np.asarray(ws)[order]
    curve = SampledCurve(ts, zs, ws)
    if L.autonomous:
        lam = 2.0 / (1.0 - np.abs(curve.zs) ** 2)
        e = 0.5 * (lam * np.abs(curve.vs)) ** 2 + L.potential_z(curve.zs, curve.times)
        stats.energy_drift = float(np.max(np.abs(e - e[0 if sign > 0 else -1])))
    final = ELState.from_raw(z, w, t)
    return IntegrationResult(curve, final, stats)


def discrete_action(L: MechanicalLagrangian, times, zs) -> float:
    """Composite quadrature of the action along a sampled path.

    Per segment: dt * L(q_k, chord velocity via log_map, midpoint time).
    The chord-velocity convention makes the analytic gradient below the
    exact derivative of this value.
    """
    times = np.asarray(times, dtype=float)
    zs = np.asarray(zs, dtype=complex)
    dt = np.diff(times)
    d = np.asarray(dm.dist(zs[:-1], zs[1:]))
    kinetic = 0.5 * d * d / dt
    v = L.potential_z(zs[:-1], times[:-1] + 0.5 * dt)
    return float(np.sum(kinetic - dt * v))


def discrete_action_grad(L: MechanicalLagrangian, times, zs):
    """Action value and its metric gradient with respect to each node.

    The endpoints carry gradient entries too (useful for transversality
    checks); solvers zero them out.  The gradient is the coordinate form of
    the hyperbolic-metric gradient.
    """
    times = np.asarray(times, dtype=float)
    zs = np.asarray(zs, dtype=complex)
    n = zs.size
    dt = np.diff(times)
    d = np.asarray(dm.dist(zs[:-1], zs[1:]))
    kinetic = 0.5 * d * d / dt
    tmid = times[:-1] + 0.5 * dt
    v, gv = L.potential_and_grad_z(zs[:-1], tmid)
    value = float(np.sum(kinetic - dt * v))

    grad = np.zeros(n, dtype=complex)
    fwd = np.asarray(dm.log_map(zs[:-1], zs[1:]))  # at node k toward k+1
    bwd = np.asarray(dm.log_map(zs[1:], zs[:-1]))  # at node k+1 toward k
    grad[:-1] -= fwd / dt
    grad[1:] -= bwd / dt
    grad[:-1] -= dt * gv
    return value, grad


def action(L: MechanicalLagrangian, c: SampledCurve) -> float:
    """Action of a sampled curve over its whole time interval."""
    return discrete_action(L, c.times, c.zs)


@dataclass(frozen=True)
class ActionBoundLedger:
    """The constants of the average-action sandwich for minimizers.

    For the mechanical Lagrangian with unit metric constants,
    C_K^min = C K / 4 with C = 1/2, and C_K^max = K/2 - V_min / K.
    """

    C: float = 0.5
    V_min: float = 0.0

    def __post_init__(self):
        if self.V_min > 0:
            raise ValueError("V_min must be <= 0")

    @classmethod
    def from_lagrangian(cls, L: MechanicalLagrangian):
        return cls(C=0.5, V_min=L.v_min)

    def c_k_min(self, K):
        return self.C * K / 4.0

    def c_k_max(self, K):
        if K <= 0:
            raise ValueError("K must be positive")
        return 0.5 * K - self.V_min / K

    def min_c_k_max(self):
        """min over K > 0 of C_K^max, attained at K = sqrt(2 |V_min|)."""
        if self.V_min == 0.0:
            return 0.0
        return math.sqrt(2.0 * abs(self.V_min))


def action_bounds(ledger: ActionBoundLedger, K, duration):
    """Total-action window [C_K^min K, C_K^max K] * duration for displacement speed K."""
    if K <= 0:
        raise ValueError("K must be positive")
    if duration <= 0:
        raise ValueError("duration must be positive")
    return (
        ledger.c_k_min(K) * K * duration,
        ledger.c_k_max(K) * K * duration,
    )
