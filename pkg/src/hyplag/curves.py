"""Sampled curves in the disk: statistics, interpolation, CSV serialization.

A SampledCurve is a time-stamped polyline of disk points, optionally with
velocities.  Evaluation between samples interpolates along the connecting
geodesic, which keeps the discrete action model and the curve statistics
consistent with each other.
"""

import io
import math

import numpy as np

from . import diskmath as dm
from .errors import BoundaryOverflowError
from .geometry import DiskPoint, Geodesic, TangentVec

_F = "{:.17g}".format  # full double precision for serialized floats


class SampledCurve:
    """A discretized path gamma: [a, b] -> disk with strictly increasing times."""

    def __init__(self, times, points, velocities=None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a sampled curve needs at least two samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        zs = np.asarray(
            [p.z if isinstance(p, DiskPoint) else complex(p) for p in points],
            dtype=complex,
        )
        if zs.shape != times.shape:
            raise ValueError("times and points must have the same length")
        dm.check_inside(zs)
        vs = None
        if velocities is not None:
            vs = np.asarray(
                [w.v if isinstance(w, TangentVec) else complex(w) for w in velocities],
                dtype=complex,
            )
            if vs.shape != times.shape:
                raise ValueError("velocities must match the samples")
        self.times = times
        self.zs = zs
        self.vs = vs

    def __len__(self):
        return self.times.size

    @property
    def t_min(self):
        return float(self.times[0])

    @property
    def t_max(self):
        return float(self.times[-1])

    @property
    def points(self):
        return [DiskPoint(complex(z)) for z in self.zs]

    @property
    def velocities(self):
        if self.vs is None:
            return None
        return [
            TangentVec(DiskPoint(complex(z)), complex(v))
            for z, v in zip(self.zs, self.vs)
        ]

    def _check_time(self, t):
        if t < self.times[0] - 1e-9 or t > self.times[-1] + 1e-9:
            raise ValueError(f"time {t!r} outside [{self.t_min}, {self.t_max}]")

    def position_z(self, t):
        """Raw-coordinate position at time t (geodesic interpolation)."""
        self._check_time(t)
        t = min(max(t, self.t_min), self.t_max)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self) - 2)
        t0, t1 = self.times[i], self.times[i + 1]
        if t == t0:
            return complex(self.zs[i])
        w = dm.log_map(self.zs[i], self.zs[i + 1])
        return complex(dm.exp_map(self.zs[i], w, (t - t0) / (t1 - t0)))

    def point_at(self, t) -> DiskPoint:
        return DiskPoint(self.position_z(t))

    def chord_speeds(self):
        """Per-segment average speeds d(z_k, z_{k+1}) / dt_k."""
        d = np.asarray(dm.dist(self.zs[:-1], self.zs[1:]))
        return d / np.diff(self.times)

    def max_speed(self):
        """Sup of the sampled velocity norms, falling back to chord speeds."""
        if self.vs is not None:
            return float(np.max(dm.tangent_norm(self.zs, self.vs)))
        return float(np.max(self.chord_speeds()))

    def restrict(self, a, b):
        """Sub-curve on [a, b] with interpolated endpoints; velocities dropped."""
        if a >= b:
            raise ValueError("restriction needs a < b")
        self._check_time(a)
        self._check_time(b)
        inner = (self.times > a + 1e-12) & (self.times < b - 1e-12)
        ts = np.concatenate(([a], self.times[inner], [b]))
        zs = np.concatenate(
            ([self.position_z(a)], self.zs[inner], [self.position_z(b)])
        )
        return SampledCurve(ts, zs)

    def shifted(self, delta):
        """The same path traversed delta later: t -> gamma(t - delta)."""
        return SampledCurve(
            self.times + delta, self.zs, self.vs if self.vs is not None else None
        )

    def transformed(self, iso):
        """Image of the curve under an isometry."""
        zs = iso.apply_z(self.zs)
        vs = None
        if self.vs is not None:
            vs = self.vs * iso.deriv_at(self.zs)
        return SampledCurve(self.times, zs, vs)

    def to_csv(self, path_or_file):
        """Write `t,x,y[,vx,vy]` rows at full double precision."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        f = open(path_or_file, "w", newline="\n") if own else path_or_file
        try:
            if self.vs is None:
                f.write("t,x,y\n")
                for t, z in zip(self.times, self.zs):
                    f.write(f"{_F(t)},{_F(z.real)},{_F(z.imag)}\n")
            else:
                f.write("t,x,y,vx,vy\n")
                for t, z, v in zip(self.times, self.zs, self.vs):
                    f.write(
                        f"{_F(t)},{_F(z.real)},{_F(z.imag)},{_F(v.real)},{_F(v.imag)}\n"
                    )
        finally:
            if own:
                f.close()

    @classmethod
    def from_csv(cls, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        f = open(path_or_file, "r") if own else path_or_file
        try:
            header = f.readline().strip().split(",")
            if header[:3] != ["t", "x", "y"]:
                raise ValueError(f"unexpected curve CSV header: {header!r}")
            has_v = header[3:] == ["vx", "vy"]
            if header[3:] and not has_v:
                raise ValueError(f"unexpected curve CSV header: {header!r}")
            rows = np.loadtxt(f, delimiter=",", ndmin=2)
        finally:
            if own:
                f.close()
        zs = rows[:, 1] + 1j * rows[:, 2]
        vs = rows[:, 3] + 1j * rows[:, 4] if has_v else None
        return cls(rows[:, 0], zs, vs)


def concatenate(pieces, tol=1e-8):
    """Join consecutive curve pieces whose endpoints agree in time and position."""
    if not pieces:
        raise ValueError("nothing to concatenate")
    ts = [pieces[0].times]
    zs = [pieces[0].zs]
    for prev, nxt in zip(pieces, pieces[1:]):
        if abs(prev.t_max - nxt.t_min) > 1e-9:
            raise ValueError("pieces are not contiguous in time")
        if dm.dist(prev.zs[-1], nxt.zs[0]) > tol:
            raise ValueError("pieces do not match at the joint")
        ts.append(nxt.times[1:])
        zs.append(nxt.zs[1:])
    return SampledCurve(np.concatenate(ts), np.concatenate(zs))


def from_geodesic(g: Geodesic, s0, s1, t0, t1, n):
    """Sample the geodesic arc between parameters s0, s1 uniformly over [t0, t1]."""
    ss = np.linspace(s0, s1, n + 1)
    ts = np.linspace(t0, t1, n + 1)
    zs = np.array([g.point_at(s).z for s in ss])
    return SampledCurve(ts, zs)


def rho(c: SampledCurve, a, b) -> float:
    """Average displacement d(gamma(a), gamma(b)) / (b - a)."""
    if a >= b:
        raise ValueError("rho needs a < b")
    return float(dm.dist(c.position_z(a), c.position_z(b))) / (b - a)


def curve_length(c: SampledCurve, a, b) -> float:
    """Polyline length of the restriction to [a, b] (sum of sample distances)."""
    if a >= b:
        raise ValueError("curve_length needs a < b")
    r = c.restrict(a, b)
    return float(np.sum(dm.dist(r.zs[:-1], r.zs[1:])))


def hausdorff_to_geodesic(c: SampledCurve, g: Geodesic, s_min, s_max, n_scan=None):
    """Hausdorff distance between the curve samples and the arc g([s_min, s_max]).

    One side projects every curve sample onto the arc (parameter clamped to
    the segment); the other scans the segment densely against the samples.
    """
    if s_min >= s_max:
        raise ValueError("need s_min < s_max")
    params = np.clip(np.asarray(g.project_params(c.zs)), s_min, s_max)
    feet = np.array([g.point_at(s).z for s in params])
    side_curve = float(np.max(dm.dist(c.zs, feet)))

    if n_scan is None:
        n_scan = min(max(4 * len(c), 128), 4096)
    ss = np.linspace(s_min, s_max, n_scan)
    arc = np.array([g.point_at(s).z for s in ss])
    d = np.asarray(dm.dist(arc[:, None], c.zs[None, :]))
    side_arc = float(np.max(np.min(d, axis=1)))
    return max(side_curve, side_arc)
