"""Typed Poincare-disk geometry: points, tangent vectors, geodesics, isometries.

The heavy lifting happens in `diskmath` on raw complex numbers; this module
provides the domain objects and the operations on them.  All types are
immutable after construction and every operation is a pure function, so
everything here is safe for arbitrary parallel use.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import diskmath as dm
from .errors import BoundaryOverflowError, DegenerateChordError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DiskPoint:
    """A point of the open unit disk, |z| < 1 - 1e-12 strictly."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        object.__setattr__(self, "z", z)
        if abs(z) >= 1.0 - dm.GUARD:
            raise BoundaryOverflowError(
                f"boundary overflow: |z| = {abs(z)!r} >= 1 - 1e-12"
            )

    @classmethod
    def from_xy(cls, x, y):
        return cls(complex(x, y))

    @property
    def x(self):
        return self.z.real

    @property
    def y(self):
        return self.z.imag


ORIGIN = DiskPoint(0j)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point e^{i theta} of the circle at infinity; theta stored in [0, 2 pi)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @property
    def z(self):
        """Position on the unit circle."""
        return complex(math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class TangentVec:
    """Tangent vector at a disk point, components in the coordinate chart.

    The hyperbolic norm is 2|v| / (1 - |base|^2); the zero vector is allowed.
    """

    base: DiskPoint
    v: complex

    def __post_init__(self):
        object.__setattr__(self, "v", complex(self.v))

    @property
    def norm(self):
        return float(dm.tangent_norm(self.base.z, self.v))

    def scaled(self, factor):
        return TangentVec(self.base, self.v * factor)


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving disk isometry z -> (a z + b) / (conj(b) z + conj(a)).

    Coefficients are renormalized to |a|^2 - |b|^2 = 1 on construction; a
    matrix whose determinant deviates from 1 by more than 1e-6 is rejected.
    """

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        det = abs(a) ** 2 - abs(b) ** 2
        if not det > 0 or abs(det - 1.0) > 1e-6:
            raise ValueError(f"not a unit-determinant disk isometry: det = {det!r}")
        n = math.sqrt(det)
        object.__setattr__(self, "a", a / n)
        object.__setattr__(self, "b", b / n)

    @classmethod
    def identity(cls):
        return cls(1.0 + 0j, 0j)

    @classmethod
    def rotation(cls, theta):
        return cls(*dm.rotation(theta))

    @classmethod
    def translation_to(cls, p):
        """Translation taking the origin to p (a DiskPoint or complex)."""
        z = p.z if isinstance(p, DiskPoint) else complex(p)
        return cls(*dm.translation_to(z))

    @classmethod
    def translation_along(cls, theta, length):
        """Translation by `length` along the axis through 0 with direction e^{i theta}."""
        return cls(*dm.translation_along(theta, length))

    def apply(self, p: DiskPoint) -> DiskPoint:
        return DiskPoint(complex(dm.mobius_apply(self.a, self.b, p.z)))

    def apply_z(self, z):
        """Raw-coordinate action, also valid on unit-circle points and arrays."""
        return dm.mobius_apply(self.a, self.b, z)

    def apply_boundary(self, xi: BoundaryPoint) -> BoundaryPoint:
        w = dm.mobius_apply(self.a, self.b, xi.z)
        return BoundaryPoint(math.atan2(w.imag, w.real))

    def apply_tangent(self, w: TangentVec) -> TangentVec:
        dz = dm.mobius_deriv(self.a, self.b, w.base.z)
        return TangentVec(self.apply(w.base), complex(w.v * dz))

    def apply_geodesic(self, g: "Geodesic") -> "Geodesic":
        """Image geodesic; the arclength origin is re-anchored canonically."""
        return Geodesic(self.apply_boundary(g.xi_minus), self.apply_boundary(g.xi_plus))

    def compose(self, other: "Isometry") -> "Isometry":
        return Isometry(*dm.mobius_compose(self.a, self.b, other.a, other.b))

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self) -> "Isometry":
        return Isometry(*dm.mobius_inverse(self.a, self.b))

    def deriv_at(self, z):
        return dm.mobius_deriv(self.a, self.b, z)

    @property
    def trace(self):
        """Trace of the SU(1,1) matrix; |trace| > 2 for hyperbolic elements."""
        return 2.0 * self.a.real


def dist(p: DiskPoint, q: DiskPoint) -> float:
    """Hyperbolic distance between two disk points."""
    return float(dm.dist(p.z, q.z))


def exp_map(w: TangentVec, s: float = 1.0) -> DiskPoint:
    """Geodesic with initial condition w evaluated at time s.

    dist(base, result) = s * ||w||; the zero vector returns the base point
    for every s.
    """
    return DiskPoint(complex(dm.exp_map(w.base.z, w.v, s)))


def log_map(p: DiskPoint, q: DiskPoint) -> TangentVec:
    """Inverse of exp_map: exp_map(log_map(p, q), 1) == q, norm == dist(p, q)."""
    return TangentVec(p, complex(dm.log_map(p.z, q.z)))


def _frame_from(m, tau):
    """Isometry (a, b) with 0 -> m and positive-real-axis direction -> tau at m."""
    s = math.sqrt(1.0 - abs(m) ** 2)
    half = np.exp(0.5j * math.atan2(tau.imag, tau.real))
    return half / s, m * np.conj(half) / s


def _canonical_frame(theta_minus, theta_plus):
    """Frame isometry of the geodesic with the given boundary angles.

    Maps the real diameter (oriented -1 -> +1) onto the geodesic, sending 0
    to the point of the geodesic closest to the disk center and +1 to the
    forward endpoint e^{i theta_plus}.
    """
    u = complex(math.cos(theta_minus), math.sin(theta_minus))
    w = complex(math.cos(theta_plus), math.sin(theta_plus))
    den = 1.0 + (u.conjugate() * w).real
    if den < 1e-250:
        # endpoints are antipodal: the geodesic is a diameter through 0
        m, tau = 0j, w
    else:
        c = (u + w) / den  # Euclidean center of the orthogonal circle
        ac = abs(c)
        r = math.sqrt(max(ac * ac - 1.0, 0.0))
        m = c / ac / (ac + r)  # stable form of (|c| - r) * c/|c|
        tau = 1j * (m - c)
        tau /= abs(tau)
    a, b = _frame_from(m, tau)
    fwd = dm.mobius_apply(a, b, 1.0 + 0j)
    if abs(fwd - w) > abs(fwd - u):
        a, b = _frame_from(m, -tau)
    return a, b


@dataclass(frozen=True)
class Geodesic:
    """Oriented arclength-parameterized geodesic with endpoints on the circle.

    `point_at(origin_param)` is the point of the geodesic closest to the disk
    center; increasing parameter runs from xi_minus toward xi_plus.
    """

    xi_minus: BoundaryPoint
    xi_plus: BoundaryPoint
    origin_param: float = 0.0
    _frame: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gap = (self.xi_plus.theta - self.xi_minus.theta) % TWO_PI
        if min(gap, TWO_PI - gap) < 1e-9:
            raise DegenerateChordError(
                "degenerate chord: boundary endpoints coincide"
            )
        object.__setattr__(
            self, "_frame", _canonical_frame(self.xi_minus.theta, self.xi_plus.theta)
        )

    def point_at(self, s: float) -> DiskPoint:
        a, b = self._frame
        x = math.tanh(0.5 * (s - self.origin_param))
        return DiskPoint(complex(dm.mobius_apply(a, b, x)))

    def unit_tangent_at(self, s: float) -> TangentVec:
        a, b = self._frame
        x = math.tanh(0.5 * (s - self.origin_param))
        v = 0.5 * (1.0 - x * x) * dm.mobius_deriv(a, b, x)
        return TangentVec(DiskPoint(complex(dm.mobius_apply(a, b, x))), complex(v))

    def project_params(self, z):
        """Arclength parameters of the orthogonal projections of points z (array ok)."""
        a, b = dm.mobius_inverse(*self._frame)
        w = dm.mobius_apply(a, b, np.asarray(z))
        u = w.real
        q = np.abs(w) ** 2 + 1.0
        x = 2.0 * u / (q + np.sqrt(q * q - 4.0 * u * u))
        return 2.0 * np.arctanh(x) + self.origin_param

    def with_origin_param(self, origin_param: float) -> "Geodesic":
        return Geodesic(self.xi_minus, self.xi_plus, origin_param)


def geodesic_through(p: DiskPoint, q: DiskPoint) -> Geodesic:
    """The oriented geodesic through p and q, running from p toward q."""
    if p.z == q.z or dist(p, q) < 1e-14:
        raise DegenerateChordError("degenerate chord: p == q")
    u = (q.z - p.z) / (1.0 - p.z.conjugate() * q.z)
    u /= abs(u)
    fwd = dm.mobius_apply(*dm.translation_to(p.z), u)
    bwd = dm.mobius_apply(*dm.translation_to(p.z), -u)
    return Geodesic(
        BoundaryPoint(math.atan2(bwd.imag, bwd.real)),
        BoundaryPoint(math.atan2(fwd.imag, fwd.real)),
    )


def project_to_geodesic(g: Geodesic, p: DiskPoint):
    """Orthogonal projection of p onto g: (foot point, arclength parameter).

    The foot minimizes dist(p, g.point_at(u)) over all u, and the connecting
    geodesic meets g orthogonally.
    """
    s = float(g.project_params(p.z))
    return g.point_at(s), s


def sigma_project(g: Geodesic, p: DiskPoint) -> TangentVec:
    """Project p onto g and return g's unit tangent at the foot."""
    s = float(g.project_params(p.z))
    return g.unit_tangent_at(s)
