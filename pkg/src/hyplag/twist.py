"""Discrete variational dynamics: generating function, twist step, orbit segments.

The map is generated by S(x, X) = (1/2) dist^2(x, X) + V(x) with the
potential frozen on its t = 0 slice (so the time factor 1 + A is included).
Momenta are recovered from p = -dS/dx and P = dS/dX; with the gradient
identities d(1/2 dist^2)/dx = -log_map(x, X) this gives the closed form

    X = exp_map(x, p + grad V(x)),        P = -log_map(X, x).

Critical sequences of the summed action W = sum S(x_k, x_{k+1}) are orbits:
the recovered momenta iterate under the step map back onto the sequence.
"""

from dataclasses import dataclass

import numpy as np

from . import diskmath as dm
from .geometry import DiskPoint, TangentVec
from .minimize import _bb_descent, _chord_nodes, chain_preconditioner


def _grad_v(pot, z):
    if pot is None:
        return np.zeros_like(np.atleast_1d(np.asarray(z, dtype=complex)))
    return pot.grad_z(z, 0.0)


def _value_v(pot, z):
    if pot is None:
        return np.zeros(np.atleast_1d(np.asarray(z)).shape)
    return pot.value_z(z, 0.0)


def generating_S(pot, x: DiskPoint, X: DiskPoint) -> float:
    """S(x, X) = (1/2) dist^2(x, X) + V(x) at the frozen time slice."""
    d = float(dm.dist(x.z, X.z))
    return 0.5 * d * d + float(_value_v(pot, x.z)[0])


def grad1_S(pot, x: DiskPoint, X: DiskPoint) -> TangentVec:
    """Metric gradient of S in its first argument: -log_map(x, X) + grad V(x)."""
    g = -np.asarray(dm.log_map(x.z, X.z)) + _grad_v(pot, x.z)[0]
    return TangentVec(x, complex(g))


def grad2_S(pot, x: DiskPoint, X: DiskPoint) -> TangentVec:
    """Metric gradient of S in its second argument: -log_map(X, x)."""
    return TangentVec(X, complex(-np.asarray(dm.log_map(X.z, x.z))))


def twist_step(pot, x: DiskPoint, p: TangentVec):
    """One step of the generated map: (x, p) -> (X, P).

    The result satisfies the defining relations p = -grad1_S(x, X) and
    P = grad2_S(x, X).
    """
    if p.base != x:
        raise ValueError("momentum must be based at x")
    shoot = p.v + complex(_grad_v(pot, x.z)[0])
    Xz = complex(dm.exp_map(x.z, shoot))
    X = DiskPoint(Xz)
    P = TangentVec(X, complex(-np.asarray(dm.log_map(Xz, x.z))))
    return X, P


@dataclass
class TwistSequence:
    """Integer-time configuration sequence with recovered momenta.

    momenta[k] is the incoming-step momentum at points[k] (for the last
    point, the outgoing momentum of the final step), so iterating
    twist_step from (points[0], momenta[0]) replays the sequence.
    """

    points: tuple
    momenta: tuple | None
    grad_norm: float = 0.0
    iterations: int = 0
    converged: bool = True


def discrete_W(pot, zs) -> float:
    """W of a node array: sum of S over consecutive pairs."""
    zs = np.asarray(zs, dtype=complex)
    d = np.asarray(dm.dist(zs[:-1], zs[1:]))
    return float(np.sum(0.5 * d * d) + np.sum(_value_v(pot, zs[:-1])))


def _w_value_and_grad(pot, zs):
    zs = np.asarray(zs, dtype=complex)
    d = np.asarray(dm.dist(zs[:-1], zs[1:]))
    value = float(np.sum(0.5 * d * d) + np.sum(_value_v(pot, zs[:-1])))
    grad = np.zeros(zs.size, dtype=complex)
    grad[:-1] -= np.asarray(dm.log_map(zs[:-1], zs[1:]))
    grad[1:] -= np.asarray(dm.log_map(zs[1:], zs[:-1]))
    grad[:-1] += _grad_v(pot, zs[:-1])
    return value, grad


def minimize_W(
    pot, x_start: DiskPoint, x_end: DiskPoint, length, tol=1e-12, max_iter=50000
) -> TwistSequence:
    """Minimize W over sequences of `length` points joining the endpoints.

    The interior criticality condition grad2_S(x_{k-1}, x_k) +
    grad1_S(x_k, x_{k+1}) = 0 is driven below `tol` in sup norm; momenta are
    then recovered from the defining relations.  A two-point sequence has no
    interior conditions and is returned as-is.
    """
    if length < 2:
        raise ValueError("need at least two points")
    steps = length - 1
    zs = _chord_nodes(x_start, x_end, steps)
    free = np.ones(length, dtype=bool)
    free[0] = free[-1] = False

    def vag(z):
        return _w_value_and_grad(pot, z)

    precond = chain_preconditioner(1.0, steps - 1) if steps > 1 else None
    zs, _, gnorm, iters, ok = _bb_descent(
        zs, free, vag, tol, max_iter, precondition=precond
    )

    points = tuple(DiskPoint(complex(z)) for z in zs)
    momenta = []
    for k in range(steps):
        g1 = grad1_S(pot, points[k], points[k + 1])
        momenta.append(TangentVec(points[k], -g1.v))
    momenta.append(grad2_S(pot, points[steps - 1], points[steps]))
    return TwistSequence(
        points=points,
        momenta=tuple(momenta),
        grad_norm=gnorm,
        iterations=iters,
        converged=ok,
    )


def replay_error(pot, seq: TwistSequence) -> float:
    """Max distance between the sequence and its twist_step replay.

    Starts from (points[0], momenta[0]) and iterates the step map; for a
    critical sequence the replay reproduces the points.
    """
    if seq.momenta is None:
        raise ValueError("sequence has no momenta")
    x, p = seq.points[0], seq.momenta[0]
    worst = 0.0
    for k in range(1, len(seq.points)):
        x, p = twist_step(pot, x, p)
        worst = max(worst, float(dm.dist(x.z, seq.points[k].z)))
    return worst
