"""Quasi-geodesic verification and fitting over sampled curves.

A curve is a (lambda, epsilon)-quasi-geodesic when for every pair of
parameters c < d

    (d - c)/lambda - epsilon <= dist(gamma(c), gamma(d)) <= lambda (d - c) + epsilon.

Checks and fits below run over all O(n^2) sample pairs (optionally strided).
"""

from dataclasses import dataclass

import numpy as np

from . import diskmath as dm
from .curves import SampledCurve


@dataclass(frozen=True)
class QGFit:
    """Fitted quasi-geodesic constants and the pair that binds them."""

    lam: float
    eps: float
    worst_pair: tuple  # (c, d, side) with side in {"lower", "upper"}


def _pair_scan(c: SampledCurve, stride=1):
    """Yield (t_i, row of t_j, row of distances) for i < j over strided samples."""
    ts = c.times[::stride]
    zs = c.zs[::stride]
    for i in range(ts.size - 1):
        yield ts[i], ts[i + 1 :], np.asarray(dm.dist(zs[i], zs[i + 1 :]))


def qg_check(c: SampledCurve, lam, eps, stride=1):
    """Test the two-sided inequality on all sampled pairs.

    Returns (ok, worst_pair); worst_pair is the maximally violating
    (c, d, side) when failing, None when passing.
    """
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    worst = (0.0, None)
    for ti, tj, d in _pair_scan(c, stride):
        dt = tj - ti
        low = (dt / lam - eps) - d
        up = d - (lam * dt + eps)
        k = int(np.argmax(low))
        if low[k] > worst[0]:
            worst = (float(low[k]), (float(ti), float(tj[k]), "lower"))
        k = int(np.argmax(up))
        if up[k] > worst[0]:
            worst = (float(up[k]), (float(ti), float(tj[k]), "upper"))
    if worst[0] > 0.0:
        return False, worst[1]
    return True, None


def qg_fit(c: SampledCurve, lambda_grid, stride=1) -> QGFit:
    """Smallest epsilon per grid lambda; returns the grid point minimizing it.

    The fitted pair passes qg_check exactly (the inequalities are closed).
    """
    grid = [float(l) for l in lambda_grid]
    if not grid:
        raise ValueError("empty lambda grid")
    if min(grid) < 1:
        raise ValueError("lambda grid must be >= 1")
    best = None
    for lam in grid:
        eps = 0.0
        pair = (float(c.times[0]), float(c.times[-1]), "upper")
        for ti, tj, d in _pair_scan(c, stride):
            dt = tj - ti
            low = dt / lam - d
            up = d - lam * dt
            k = int(np.argmax(low))
            if low[k] > eps:
                eps = float(low[k])
                pair = (float(ti), float(tj[k]), "lower")
            k = int(np.argmax(up))
            if up[k] > eps:
                eps = float(up[k])
                pair = (float(ti), float(tj[k]), "upper")
        if best is None or eps < best.eps:
            best = QGFit(lam=lam, eps=eps, worst_pair=pair)
    return best
