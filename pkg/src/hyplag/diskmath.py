"""Array-level Poincare disk kernels.

Points are complex numbers z with |z| < 1.  The metric is the conformal one

    ds = 2 |dz| / (1 - |z|^2)        (constant curvature -1),

so the hyperbolic norm of a coordinate tangent vector v based at z is
2|v| / (1 - |z|^2).  Orientation-preserving isometries are Mobius maps

    z -> (a z + b) / (conj(b) z + conj(a)),     |a|^2 - |b|^2 = 1,

represented by the pair (a, b).

Every function broadcasts over numpy arrays of complex dtype and accepts
plain python complex scalars.  The typed layer in `geometry` wraps these
kernels; the solvers call them directly on whole arrays of curve nodes.

Points are kept strictly inside |z| <= 1 - GUARD.  Operations that would
land outside raise BoundaryOverflowError instead of clamping: precision
loss at the rim is the dominant failure mode and has to be loud.
"""

import numpy as np

from .errors import BoundaryOverflowError

GUARD = 1e-12


def check_inside(z):
    """Raise BoundaryOverflowError unless every entry has |z| < 1 - GUARD."""
    if np.any(np.abs(z) >= 1.0 - GUARD):
        worst = float(np.max(np.abs(z)))
        raise BoundaryOverflowError(
            f"boundary overflow: |z| = {worst!r} >= 1 - 1e-12"
        )
    return z


def conformal_factor(z):
    """Metric factor lambda(z) = 2 / (1 - |z|^2)."""
    z = np.asarray(z)
    return 2.0 / (1.0 - np.abs(z) ** 2)


def dist(z1, z2):
    """Hyperbolic distance arcosh(1 + 2|z1-z2|^2 / ((1-|z1|^2)(1-|z2|^2)))."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    num = np.abs(z1 - z2) ** 2
    den = (1.0 - np.abs(z1) ** 2) * (1.0 - np.abs(z2) ** 2)
    return np.arccosh(1.0 + 2.0 * num / den)


def tangent_norm(z, v):
    """Hyperbolic norm of the coordinate vector v based at z."""
    return conformal_factor(z) * np.abs(v)


def exp_map(z, v, s=1.0):
    """Point reached after time s along the geodesic with initial velocity v at z.

    The zero vector is a fixed point for every s.  Raises on boundary
    overflow; never clamps.
    """
    z = np.asarray(z)
    v = np.asarray(v)
    v0 = np.asarray(s * v) / (1.0 - np.abs(z) ** 2)  # pulled back to the origin
    r = np.abs(v0)
    scale = np.divide(np.tanh(r), r, out=np.zeros_like(r), where=r > 0)
    e = scale * v0
    out = (e + z) / (1.0 + np.conj(z) * e)
    check_inside(out)
    return out


def log_map(z1, z2):
    """Initial velocity of the unit-time geodesic from z1 to z2.

    Inverse of exp_map: exp_map(z1, log_map(z1, z2)) == z2, and the
    hyperbolic norm of the result equals dist(z1, z2).
    """
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    u = (z2 - z1) / (1.0 - np.conj(z1) * z2)
    au = np.abs(u)
    d = np.arccosh(1.0 + 2.0 * au**2 / ((1.0 - au**2)))
    # same closed form as dist(z1, z2) after moving z1 to the origin
    direction = np.divide(u, au, out=np.zeros_like(u), where=au > 0)
    return (1.0 - np.abs(z1) ** 2) * (d / 2.0) * direction


def mobius_apply(a, b, z):
    """Apply the isometry (a, b) to points (works on boundary points too)."""
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def mobius_deriv(a, b, z):
    """Complex derivative of the isometry at z; tangent vectors map by v -> v * deriv."""
    return 1.0 / (np.conj(b) * z + np.conj(a)) ** 2


def mobius_compose(a1, b1, a2, b2):
    """(a, b) of the composition g1 o g2."""
    return a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def mobius_inverse(a, b):
    """(a, b) of the inverse isometry."""
    return np.conj(a), -b


def translation_to(w):
    """Hyperbolic translation sending the origin to w (axis through 0 and w)."""
    w = complex(w)
    s = np.sqrt(1.0 - abs(w) ** 2)
    return 1.0 / s + 0j, w / s


def rotation(theta):
    """Rotation about the origin by angle theta."""
    return np.exp(0.5j * theta), 0j


def translation_along(theta, length):
    """Translation by `length` along the oriented axis through 0 in direction e^{i theta}."""
    a = np.cosh(0.5 * length) + 0j
    b = np.exp(1j * theta) * np.sinh(0.5 * length)
    return a, b
