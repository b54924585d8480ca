"""Finite-scale shadowing of a reference geodesic by action minimizers.

For each half-length N, solve the boundary-value problem whose endpoints are
the points of the reference geodesic at arclength +-K N, so the minimizing
segment has total average displacement exactly K.  The reports collect the
Hausdorff distance to the geodesic chord, windowed average speeds, and
fitted quasi-geodesic constants; uniform boundedness of the chord distance
over N is the finite surrogate of the shadowing statement.

Also here: the curve-shortening surgery that swaps a stalled window of a
curve for a time-shifted copy plus two freshly minimized connectors.  On a
true minimizer the surgery cannot gain action; on a curve that crawls
through the window it does, which is the contradiction mechanism made
numerical.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import diskmath as dm
from .constants import compute_constants, measured_speed_bound
from .curves import SampledCurve, concatenate, hausdorff_to_geodesic
from .errors import HorizonError, ThresholdError
from .geometry import BoundaryPoint, DiskPoint, Geodesic
from .mechanics import ActionBoundLedger, MechanicalLagrangian, action
from .minimize import BVProblem, MinimizeResult, solve_bvp
from .qg import qg_fit

HORIZON_RADIUS = 25.0  # hyperbolic distance from the origin; |z| ~ 1 - 3e-11

DEFAULT_LAMBDA_GRID = (1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)


@dataclass
class ShadowReport:
    N: float
    K: float
    chord_hausdorff: float
    speed_min: float | None
    speed_max: float | None
    lambda_fit: float
    epsilon_fit: float
    endpoint_angles: tuple
    result: MinimizeResult


@dataclass
class ShadowRun:
    reports: list
    constants: object | None
    kappa_estimate: float


def geodesic_reach(g: Geodesic, horizon=HORIZON_RADIUS):
    """Largest |s - origin_param| with d(0, g.point_at(s)) <= horizon.

    Right-triangle relation: cosh d(0, g(s)) = cosh d0 * cosh(s - s0) with d0
    the distance from the center to the geodesic.
    """
    d0 = float(dm.dist(0j, g.point_at(g.origin_param).z))
    if d0 >= horizon:
        return 0.0
    return math.acosh(math.cosh(horizon) / math.cosh(d0))


def max_safe_half_length(g: Geodesic, K, horizon=HORIZON_RADIUS):
    """Largest N with both g(+-K N) inside the horizon."""
    reach = geodesic_reach(g, horizon)
    return max(0.0, (reach - abs(g.origin_param)) / K)


def window_speeds(curve: SampledCurve, min_length):
    """(min, max) of the average displacement over sampled windows of at
    least the given length; (None, None) when no window fits."""
    ts = curve.times
    lo, hi = None, None
    for i in range(ts.size - 1):
        sel = ts[i + 1 :] - ts[i] >= min_length - 1e-12
        if not sel.any():
            continue
        d = np.asarray(dm.dist(curve.zs[i], curve.zs[i + 1 :][sel]))
        r = d / (ts[i + 1 :][sel] - ts[i])
        lo = float(r.min()) if lo is None else min(lo, float(r.min()))
        hi = float(r.max()) if hi is None else max(hi, float(r.max()))
    return lo, hi


def shadow_experiment(
    L: MechanicalLagrangian,
    gamma_ref: Geodesic,
    K,
    N_list,
    constants=None,
    n_per_unit=16,
    tol_grad=1e-9,
    restarts=2,
    max_iter=20000,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    rng=None,
    threads=1,
) -> ShadowRun:
    """Solve the endpoint-on-geodesic problems for each N and report.

    When `constants` is None they are assembled afterwards from the measured
    speed bound (skipped, with windowed speeds set to None, if K is below
    the ledger threshold).
    """
    if K <= 0:
        raise ValueError("K must be positive")
    n_max = max_safe_half_length(gamma_ref, K)
    bad = [N for N in N_list if N > n_max]
    if bad:
        raise HorizonError(
            f"exceeds numerical horizon: N = {max(bad)} with K = {K}; "
            f"max safe N = {n_max:.3f}"
        )
    rng = np.random.default_rng(0) if rng is None else rng
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=len(N_list))]

    def solve_one(args):
        N, seed = args
        prob = BVProblem(
            x_a=gamma_ref.point_at(-K * N),
            x_b=gamma_ref.point_at(K * N),
            a=-float(N),
            b=float(N),
            n=max(64, int(round(n_per_unit * 2 * N))),
            tol_grad=tol_grad,
            restarts=restarts,
            max_iter=max_iter,
        )
        return solve_bvp(L, prob, rng=np.random.default_rng(seed))

    jobs = list(zip(N_list, seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(solve_one, jobs))
    else:
        results = [solve_one(j) for j in jobs]

    if constants is None:
        ledger = ActionBoundLedger.from_lagrangian(L)
        k_dp = measured_speed_bound([r.curve for r in results])
        try:
            constants = compute_constants(ledger, K, K_dprime=k_dp)
        except ThresholdError:
            constants = None

    reports = []
    for N, res in zip(N_list, results):
        fit = qg_fit(res.curve, lambda_grid)
        if constants is not None:
            smin, smax = window_speeds(res.curve, constants.N0)
        else:
            smin, smax = None, None
        z0, z1 = res.curve.zs[0], res.curve.zs[-1]
        reports.append(
            ShadowReport(
                N=float(N),
                K=float(K),
                chord_hausdorff=hausdorff_to_geodesic(
                    res.curve, gamma_ref, -K * N, K * N
                ),
                speed_min=smin,
                speed_max=smax,
                lambda_fit=fit.lam,
                epsilon_fit=fit.eps,
                endpoint_angles=(
                    BoundaryPoint(math.atan2(z0.imag, z0.real)),
                    BoundaryPoint(math.atan2(z1.imag, z1.real)),
                ),
                result=res,
            )
        )
    kappa = max(r.chord_hausdorff for r in reports)
    if constants is not None:
        constants = type(constants)(**{**_constants_fields(constants), "kappa": kappa})
    return ShadowRun(reports=reports, constants=constants, kappa_estimate=kappa)


def _constants_fields(c):
    from dataclasses import asdict

    return asdict(c)


def _is_integer(x, tol=1e-9):
    return abs(x - round(x)) <= tol


def _first_reach_time(curve: SampledCurve, t0, t1, target):
    """Earliest u in (t0, t1] with d(gamma(t0), gamma(u)) = target, else t1."""
    z0 = curve.position_z(t0)

    def f(u):
        return float(dm.dist(z0, curve.position_z(u))) - target

    ts = [t for t in curve.times if t0 < t < t1]
    grid = [t0] + ts + [t1]
    prev = grid[0]
    for u in grid[1:]:
        if f(u) >= 0.0:
            lo, hi = prev, u
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if f(mid) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = u
    return t1


def shortening_surgery(
    L: MechanicalLagrangian,
    gamma: SampledCurve,
    a_prime,
    b_prime,
    c,
    d,
    n_per_unit=32,
    tol_grad=1e-10,
    rng=None,
):
    """Rebuild gamma with the window [c, d] replaced by a time-shifted copy.

    [a', b'] is a unit subinterval ahead of the window where the curve is
    fast; [c, d] is the slow window, of even integer length 2n.  The new
    curve copies gamma outside, inserts gamma(t - n) on [b''+n, c+n], and
    joins with two freshly minimized segments, where b'' is the first time
    the displacement from gamma(a') reaches the curve's overall average
    speed.  Returns (new curve, action(gamma) - action(new curve)).
    """
    a, b = gamma.t_min, gamma.t_max
    if not _is_integer(b_prime - a_prime) or abs(b_prime - a_prime - 1.0) > 1e-9:
        raise ValueError("need b' - a' = 1")
    if not _is_integer(a_prime - a):
        raise ValueError("a' must be an integer offset from the start")
    if not _is_integer(b - d):
        raise ValueError("d must be an integer offset from the end")
    if not _is_integer(d - c) or (round(d - c) % 2) or d - c < 2:
        raise ValueError("the window d - c must be a positive even integer")
    if not (a <= a_prime and b_prime <= c and d <= b):
        raise ValueError("need a <= a' < b' <= c < d <= b")
    n = int(round(d - c)) // 2

    K = float(dm.dist(gamma.position_z(a), gamma.position_z(b))) / (b - a)
    b2 = _first_reach_time(gamma, a_prime, b_prime, K)
    rng = np.random.default_rng(7) if rng is None else rng

    def mini(t0, t1, z0, z1):
        prob = BVProblem(
            x_a=DiskPoint(complex(z0)),
            x_b=DiskPoint(complex(z1)),
            a=t0,
            b=t1,
            n=max(8, int(round(n_per_unit * (t1 - t0)))),
            tol_grad=tol_grad,
            restarts=0,
        )
        return solve_bvp(L, prob, rng=rng).curve

    pieces = []
    if a_prime > a + 1e-12:
        pieces.append(gamma.restrict(a, a_prime))
    pieces.append(mini(a_prime, b2 + n, gamma.position_z(a_prime), gamma.position_z(b2)))
    if c - b2 > 1e-9:
        pieces.append(gamma.restrict(b2, c).shifted(n))
    pieces.append(mini(c + n, d, gamma.position_z(c), gamma.position_z(d)))
    if b > d + 1e-12:
        pieces.append(gamma.restrict(d, b))
    star = concatenate(pieces)
    diff = action(L, gamma) - action(L, star)
    return star, diff
