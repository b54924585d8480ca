"""Orbit projections onto asymptotic geodesics, averaged sections, cocycles.

An OrbitRecord is a finite-horizon trajectory of the flow over
[-T_max, T_max].  Its asymptotic geodesic is estimated from the boundary
angles of the far endpoints, with a stability delta against the half
horizon; every quantity that is an infinite-time object in principle is
reported here as such an estimator.

The scalar shadow s(t) is the arclength parameter of the orthogonal
projection of the orbit position onto the asymptotic geodesic.  The
additive cocycle is a(z, t) = s(t) - s(0); its running average over a
window alpha,

    fuller_average(t) = (1/alpha) * integral of s over [t, t + alpha],

restores strict monotonicity along orbits once alpha is chosen so that
a(., alpha) is positive over the whole ensemble, which is exactly the
averaging trick this module implements.  Time-translates of a record share
the record's geodesic: the asymptotic geodesic of a translated orbit is the
same geodesic by definition, so only cross-record comparisons see estimator
noise.

Integrals of s use the exact antiderivative of its piecewise-linear
interpolant on the orbit's native sampling (a composite trapezoid rule),
so the telescoping identities hold to roundoff.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import diskmath as dm
from .curves import SampledCurve, concatenate
from .errors import HorizonError
from .geometry import BoundaryPoint, Geodesic, TangentVec
from .mechanics import MechanicalLagrangian, integrate_el
from .minimize import verify_subsegment_minimality
from .qg import qg_check
from .shadowing import window_speeds


@dataclass
class QkFlags:
    """Membership certificates: minimizing quasi-geodesic, windowed lower
    speed, and uniform upper speed.  Tolerance-level, not proofs."""

    minimizer_certified: bool
    window_speed_ok: bool
    speed_bound_ok: bool

    @property
    def all_ok(self):
        return self.minimizer_certified and self.window_speed_ok and self.speed_bound_ok


class OrbitRecord:
    """Finite-horizon lift of a flow orbit, with cached per-orbit estimates."""

    def __init__(self, curve: SampledCurve, qk_flags=None):
        self.curve = curve
        self.qk_flags = qk_flags
        self._geo = None
        self._delta = None
        self._s = None

    @property
    def t_min(self):
        return self.curve.t_min

    @property
    def t_max(self):
        return self.curve.t_max

    def time_shifted(self, delta):
        """The orbit started delta later, sharing this record's geodesic."""
        rec = OrbitRecord(self.curve.shifted(-delta), self.qk_flags)
        rec._geo, rec._delta = self._geo, self._delta
        if self._s is not None:
            rec._s = (self._s[0] - delta, self._s[1])
        return rec

    def transformed(self, iso):
        """Deck-transformed copy; all estimates are recomputed."""
        return OrbitRecord(self.curve.transformed(iso), self.qk_flags)


def make_orbit(L: MechanicalLagrangian, state, T_max, control=None) -> OrbitRecord:
    """Integrate the flow for +-T_max around the state and record the lift."""
    if T_max <= 0:
        raise ValueError("T_max must be positive")
    fwd = integrate_el(L, state, T_max, control)
    bwd = integrate_el(L, state, -T_max, control)
    times = np.concatenate([bwd.curve.times[:-1], fwd.curve.times])
    zs = np.concatenate([bwd.curve.zs[:-1], fwd.curve.zs])
    vs = np.concatenate([bwd.curve.vs[:-1], fwd.curve.vs])
    return OrbitRecord(SampledCurve(times, zs, vs))


def geodesic_orbit(g: Geodesic, speed, T_max, dt=0.05, s0=0.0) -> OrbitRecord:
    """Synthetic record moving along g at constant speed (for tests and demos)."""
    ts = np.arange(-T_max, T_max + 0.5 * dt, dt)
    zs = np.array([g.point_at(s0 + speed * t).z for t in ts])
    vs = np.array([g.unit_tangent_at(s0 + speed * t).v * speed for t in ts])
    return OrbitRecord(SampledCurve(ts, zs, vs))


def reparameterized_orbit(g: Geodesic, s_of_t, T_max, dt=0.02) -> OrbitRecord:
    """Record tracing g with arclength schedule s_of_t (wobbles, stalls...)."""
    ts = np.arange(-T_max, T_max + 0.5 * dt, dt)
    zs = np.array([g.point_at(float(s_of_t(t))).z for t in ts])
    return OrbitRecord(SampledCurve(ts, zs))


def _wrap_angle(x):
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def asymptotic_geodesic(orbit: OrbitRecord, min_radius=5.0):
    """Estimated asymptotic geodesic and the half-horizon stability delta.

    Boundary angles are read off the far endpoints; the delta compares them
    with the angles at half the horizon.  Fails when the endpoints are too
    close to the curve's midpoint for any direction to be meaningful.
    """
    if orbit._geo is not None:
        return orbit._geo, orbit._delta
    c = orbit.curve
    t_mid = 0.5 * (c.t_min + c.t_max)
    z_mid = c.position_z(t_mid)
    z_minus, z_plus = c.zs[0], c.zs[-1]
    if (
        float(dm.dist(z_mid, z_minus)) < min_radius
        or float(dm.dist(z_mid, z_plus)) < min_radius
    ):
        raise HorizonError("no asymptotic direction at horizon")
    th_minus = math.atan2(z_minus.imag, z_minus.real)
    th_plus = math.atan2(z_plus.imag, z_plus.real)
    quarter = 0.25 * (c.t_max - c.t_min)
    zh_minus = c.position_z(c.t_min + quarter)
    zh_plus = c.position_z(c.t_max - quarter)
    delta = max(
        abs(_wrap_angle(math.atan2(zh_minus.imag, zh_minus.real) - th_minus)),
        abs(_wrap_angle(math.atan2(zh_plus.imag, zh_plus.real) - th_plus)),
    )
    geo = Geodesic(BoundaryPoint(th_minus), BoundaryPoint(th_plus))
    orbit._geo, orbit._delta = geo, delta
    return geo, delta


def shadow_table(orbit: OrbitRecord):
    """(times, s) with s the arclength shadow of every sample on the geodesic."""
    if orbit._s is None:
        geo, _ = asymptotic_geodesic(orbit)
        s = np.asarray(geo.project_params(orbit.curve.zs), dtype=float)
        orbit._s = (orbit.curve.times.copy(), s)
    return orbit._s


def _s_at(orbit, t):
    ts, s = shadow_table(orbit)
    if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
        raise HorizonError(f"time {t!r} beyond the orbit horizon")
    return float(np.interp(t, ts, s))


def sigma_of(orbit: OrbitRecord, t):
    """Unit tangent of the asymptotic geodesic at the projected foot, and the
    scalar shadow position s."""
    geo, _ = asymptotic_geodesic(orbit)
    s = _s_at(orbit, t)
    return geo.unit_tangent_at(s), s


def cocycle_a(orbit: OrbitRecord, t, start=0.0) -> float:
    """a(z, t) = s(start + t) - s(start): shadow progress over time t."""
    return _s_at(orbit, start + t) - _s_at(orbit, start)


class _PLIntegral:
    """Exact antiderivative of the piecewise-linear interpolant of (t, s)."""

    def __init__(self, ts, s):
        self.ts = ts
        self.s = s
        seg = 0.5 * (s[1:] + s[:-1]) * np.diff(ts)
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])

    def __call__(self, u):
        ts, s = self.ts, self.s
        if u < ts[0] - 1e-9 or u > ts[-1] + 1e-9:
            raise HorizonError(f"time {u!r} beyond the orbit horizon")
        u = min(max(u, ts[0]), ts[-1])
        i = min(max(int(np.searchsorted(ts, u, side="right")) - 1, 0), ts.size - 2)
        du = u - ts[i]
        slope = (s[i + 1] - s[i]) / (ts[i + 1] - ts[i])
        return float(self.cum[i] + s[i] * du + 0.5 * slope * du * du)

    def between(self, t0, t1):
        return self(t1) - self(t0)


def _integral(orbit):
    ts, s = shadow_table(orbit)
    return _PLIntegral(ts, s)


def fuller_average(orbit: OrbitRecord, alpha, t) -> float:
    """Average shadow position over [t, t + alpha]:
    sigma(t) + (1/alpha) * integral of a(., u) du, as an arclength position."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    F = _integral(orbit)
    return F.between(t, t + alpha) / alpha


def choose_alpha(orbits, grid_step=0.25, budget=64):
    """Smallest grid alpha with positive shadow progress across the ensemble.

    The margin is the worst a(., alpha) over all orbits and all start times
    on their native sampling.
    """
    if not orbits:
        raise ValueError("empty ensemble")
    for j in range(1, budget + 1):
        alpha = j * grid_step
        margin = math.inf
        feasible = True
        for orbit in orbits:
            ts, s = shadow_table(orbit)
            sel = ts + alpha <= ts[-1] + 1e-9
            if not sel.any():
                feasible = False
                break
            starts = ts[sel]
            inc = np.interp(starts + alpha, ts, s) - s[sel]
            margin = min(margin, float(inc.min()))
        if feasible and margin > 0.0:
            return alpha, margin
    raise HorizonError("no uniform alpha at this horizon")


@dataclass
class MonotonicityReport:
    min_increment: float
    argmin_beta: float
    argmin_t: float
    raw_sigma_monotone: bool


def monotonicity_check(orbit: OrbitRecord, alpha, beta_grid) -> MonotonicityReport:
    """Min averaged-shadow increment over the beta grid and all start times.

    A positive minimum is the monotone-section statement at this horizon.
    The report also says whether the raw (unaveraged) shadow was already
    monotone, so genuinely non-monotone raw sections are logged, never
    assumed away.
    """
    ts, s = shadow_table(orbit)
    F = _PLIntegral(ts, s)
    worst = (math.inf, 0.0, 0.0)
    for beta in beta_grid:
        if beta <= 0:
            raise ValueError("beta must be positive")
        sel = ts + beta + alpha <= ts[-1] + 1e-9
        starts = ts[sel]
        for t in starts:
            inc = (F.between(t + beta, t + beta + alpha) - F.between(t, t + alpha)) / alpha
            if inc < worst[0]:
                worst = (inc, float(beta), float(t))
    raw_mono = bool(np.all(np.diff(s) > 0.0))
    return MonotonicityReport(
        min_increment=worst[0],
        argmin_beta=worst[1],
        argmin_t=worst[2],
        raw_sigma_monotone=raw_mono,
    )


def displacement_cocycle(orbit: OrbitRecord, t, start=0.0) -> float:
    """D(z, t) = d(gamma(start + t), gamma(start)), from the lifted trajectory."""
    c = orbit.curve
    return float(dm.dist(c.position_z(start + t), c.position_z(start)))


@dataclass
class DstarEstimate:
    estimate: float
    halfwidth: float
    within_tol: bool | None = None


def cesaro_Dstar(orbit: OrbitRecord, tol=None) -> DstarEstimate:
    """Average displacement rate D(z, T)/T at the horizon.

    The halfwidth is half the spread of D(z, T)/T over T in the upper half
    of the horizon; a halfwidth above `tol` flags the estimate as not yet
    settled (not fatal).
    """
    c = orbit.curve
    if c.t_max <= 0:
        raise ValueError("the record must extend past time 0")
    T = c.t_max
    z0 = c.position_z(0.0)
    sel = c.times >= 0.5 * T - 1e-12
    ts = c.times[sel]
    rates = np.asarray(dm.dist(z0, c.zs[sel])) / ts
    est = float(dm.dist(z0, c.position_z(T))) / T
    halfwidth = 0.5 * (float(rates.max()) - float(rates.min()))
    ok = None if tol is None else bool(halfwidth <= tol)
    return DstarEstimate(estimate=est, halfwidth=halfwidth, within_tol=ok)


def evaluate_qk(
    L: MechanicalLagrangian,
    orbit: OrbitRecord,
    constants,
    samples=6,
    rel_tol=1e-3,
    max_nodes=96,
    rng=None,
) -> QkFlags:
    """Compute the three membership flags against a constants ledger."""
    mini = verify_subsegment_minimality(
        L, orbit.curve, samples=samples, rng=rng, rel_tol=rel_tol, max_nodes=max_nodes
    )
    qg_ok, _ = qg_check(
        orbit.curve, constants.lam, constants.eps, stride=max(1, len(orbit.curve) // 512)
    )
    lo, _hi = window_speeds(orbit.curve, constants.N0)
    window_ok = lo is None or lo >= constants.k_dprime - 1e-9
    speed_ok = orbit.curve.max_speed() <= constants.K_dprime + 1e-9
    flags = QkFlags(
        minimizer_certified=bool(mini.certified and qg_ok),
        window_speed_ok=bool(window_ok),
        speed_bound_ok=bool(speed_ok),
    )
    orbit.qk_flags = flags
    return flags
