"""Cocompact covering group of the disk and equivariant time-periodic potentials.

The group is the side-pairing group of the regular hyperbolic octagon with
vertex angle pi/4 (opposite sides identified by translations through the
center), the standard genus-2 construction.  The octagon is the Dirichlet
domain of the origin; its eight side-pairing translations, closed under
inverses, are the generator set used everywhere below.

Orbit enumeration is breadth-first over word length, vectorized layer by
layer, with deduplication by orbit point and pruning once an orbit point is
farther than `radius + 2 * diameter(domain)` from the base point.  Results
are cached behind a lock, so parallel queries are safe.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import diskmath as dm
from .errors import ConvergenceError, OrbitBudgetError
from .geometry import DiskPoint, Isometry, TangentVec

# Regular octagon with interior angle pi/4: eight tiles meet at each vertex.
# Right triangle (center, side midpoint, vertex) with angles pi/8, pi/2, pi/8
# gives cosh(vertex radius) = cot^2(pi/8) and cosh(apothem) = cot(pi/8).
_COT8 = 1.0 / math.tan(math.pi / 8.0)
OCTAGON_VERTEX_RADIUS = math.acosh(_COT8 * _COT8)
OCTAGON_APOTHEM = math.acosh(_COT8)
OCTAGON_TRANSLATION_LENGTH = 2.0 * OCTAGON_APOTHEM


@dataclass(frozen=True)
class FundamentalDomain:
    """Regular fundamental polygon centered at the origin."""

    center: DiskPoint
    vertex_radius: float
    n_sides: int = 8

    @property
    def diameter(self):
        return 2.0 * self.vertex_radius

    def vertices(self):
        r = math.tanh(0.5 * self.vertex_radius)
        return [
            DiskPoint(r * np.exp(2j * math.pi * k / self.n_sides))
            for k in range(self.n_sides)
        ]

    def interior_angle(self):
        """Interior angle at a vertex, from the vertex radius."""
        return 2.0 * math.atan(
            1.0 / (math.cosh(self.vertex_radius) * math.tan(math.pi / self.n_sides))
        )


@dataclass(frozen=True)
class FuchsianGroup:
    """A discrete group of disk isometries given by a generator set closed
    under inverses; `inverse_index[i]` is the index of generators[i]^-1."""

    generators: tuple
    inverse_index: tuple
    vertex_cycle: tuple | None = None
    cocompact: bool = True
    translation_length: float = 0.0
    _origin_images: np.ndarray = field(init=False, repr=False, compare=False)
    _gen_a: np.ndarray = field(init=False, repr=False, compare=False)
    _gen_b: np.ndarray = field(init=False, repr=False, compare=False)
    _inv_a: np.ndarray = field(init=False, repr=False, compare=False)
    _inv_b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ga = np.array([g.a for g in self.generators])
        gb = np.array([g.b for g in self.generators])
        inv = list(self.inverse_index)
        object.__setattr__(self, "_gen_a", ga)
        object.__setattr__(self, "_gen_b", gb)
        object.__setattr__(self, "_inv_a", ga[inv])
        object.__setattr__(self, "_inv_b", gb[inv])
        object.__setattr__(
            self, "_origin_images", dm.mobius_apply(ga, gb, np.zeros(len(ga)))
        )

    def cache_key(self):
        coeffs = np.round(
            np.concatenate([self._gen_a, self._gen_b]).view(float), 12
        )
        return tuple(coeffs.tolist())

    def word_isometry(self, word):
        """Compose a word (g_{w0} o g_{w1} o ...) into a single isometry."""
        iso = Isometry.identity()
        for i in word:
            iso = iso.compose(self.generators[i])
        return iso


class OctagonConstructionError(RuntimeError):
    pass


def _trace_vertex_cycle(gens, vertex_radius):
    """Walk the tiles around vertex 0 of the base octagon, collecting the word.

    Crossing side j of the tile h(O) moves to h o t_j; seen from the new
    tile, the shared side is the paired side j+4.  The corner of each tile
    sitting at the base vertex is located numerically, so a mislabeled
    pairing cannot silently pass.
    """
    re = math.tanh(0.5 * vertex_radius)
    verts = re * np.exp(2j * math.pi * np.arange(8) / 8.0)
    v0 = verts[0]
    h = Isometry.identity()
    word = []
    corner, entry = 0, None
    for step in range(8):
        sides = [corner % 8, (corner - 1) % 8]
        choices = [j for j in sides if j != entry]
        j = sides[0] if step == 0 else choices[0]
        h = h.compose(gens[j])
        word.append(j)
        entry = (j + 4) % 8
        imgs = h.apply_z(verts)
        hits = np.nonzero(np.abs(imgs - v0) < 1e-6)[0]
        if hits.size != 1:
            raise OctagonConstructionError(
                f"vertex tracing lost the corner at step {step}: {hits.size} hits"
            )
        corner = int(hits[0])
    return tuple(word), h


def relator_residual(group):
    """Deviation of the vertex-cycle product from the identity Mobius map."""
    if group.vertex_cycle is None:
        raise ValueError("group has no vertex cycle")
    h = group.word_isometry(group.vertex_cycle)
    plus = max(abs(h.a - 1.0), abs(h.b))
    minus = max(abs(h.a + 1.0), abs(h.b))
    return min(plus, minus)


def build_octagon_group():
    """The genus-2 octagon group and its fundamental octagon.

    Generator t_i translates by twice the apothem along the axis through the
    midpoint of side i (direction (2i+1) pi/8), so t_{i+4} = t_i^{-1} and
    the octagon maps to the neighboring tile across side i.
    """
    gens = tuple(
        Isometry.translation_along(
            (2 * i + 1) * math.pi / 8.0, OCTAGON_TRANSLATION_LENGTH
        )
        for i in range(8)
    )
    word, h = _trace_vertex_cycle(gens, OCTAGON_VERTEX_RADIUS)
    group = FuchsianGroup(
        generators=gens,
        inverse_index=tuple((i + 4) % 8 for i in range(8)),
        vertex_cycle=word,
        cocompact=True,
        translation_length=OCTAGON_TRANSLATION_LENGTH,
    )
    res = relator_residual(group)
    if res > 1e-8:
        raise OctagonConstructionError(
            f"vertex cycle product is not the identity (residual {res:.2e})"
        )
    domain = FundamentalDomain(DiskPoint(0j), OCTAGON_VERTEX_RADIUS)
    return group, domain


def cyclic_test_group(translation_length=3.0):
    """Cyclic group of a single hyperbolic translation.

    Test fixture only: the quotient is not compact, so the standing
    hypotheses of the compact theory are not satisfied and orbit sums over
    it are genuinely truncated.
    """
    t = Isometry.translation_along(0.0, translation_length)
    return FuchsianGroup(
        generators=(t, t.inverse()),
        inverse_index=(1, 0),
        vertex_cycle=None,
        cocompact=False,
        translation_length=translation_length,
    )


def in_dirichlet_domain(group, p, tol=1e-9):
    """Dirichlet test: p is no farther from the origin than from its images."""
    z = p.z if isinstance(p, DiskPoint) else complex(p)
    d0 = float(dm.dist(z, 0j))
    dg = np.asarray(dm.dist(z, group._origin_images))
    return bool(np.all(d0 <= dg + tol))


def _reduce_array(group, z, max_steps=4096):
    """Greedy Dirichlet reduction of an array of points.

    Returns the reduced points and, per point, the complex derivative of the
    applied word (for pulling tangent vectors back to the original points).
    """
    z = np.array(z, dtype=complex)
    dfac = np.ones_like(z)
    go = group._origin_images
    for _ in range(max_steps):
        d0 = np.asarray(dm.dist(z, 0j))
        dg = np.asarray(dm.dist(z[:, None], go[None, :]))
        best = np.argmin(dg, axis=1)
        dbest = dg[np.arange(z.size), best]
        mask = dbest < d0 - 1e-15
        if not mask.any():
            return z, dfac
        a = group._inv_a[best[mask]]
        b = group._inv_b[best[mask]]
        zm = z[mask]
        dfac[mask] = dfac[mask] * dm.mobius_deriv(a, b, zm)
        z[mask] = dm.mobius_apply(a, b, zm)
    raise ConvergenceError("domain reduction exceeded its step budget")


def reduce_to_domain(group, domain, p):
    """Move p into the Dirichlet domain: returns (p', word) with p' = word . p."""
    z = p.z if isinstance(p, DiskPoint) else complex(p)
    go = group._origin_images
    word = []
    for _ in range(4096):
        d0 = float(dm.dist(z, 0j))
        dg = np.asarray(dm.dist(z, go))
        best = int(np.argmin(dg))
        if dg[best] >= d0 - 1e-15:
            return DiskPoint(complex(z)), tuple(reversed(word))
        inv = group.inverse_index[best]
        z = complex(dm.mobius_apply(group._gen_a[inv], group._gen_b[inv], z))
        word.append(inv)
    raise ConvergenceError("domain reduction exceeded its step budget")


_ORBIT_CACHE = {}
_ORBIT_LOCK = threading.Lock()


def _pack_keys(z, scale=1e7):
    kx = np.round(z.real * scale).astype(np.int64)
    ky = np.round(z.imag * scale).astype(np.int64)
    return kx * (1 << 33) + ky


def _orbit_bfs(group, z0, radius, budget, prune_slack):
    """Layered BFS over group elements, deduplicated by orbit point.

    Returns (points, dists, parents, gens, kept_idx): flat per-element arrays
    plus the indices of elements whose orbit point lies within `radius`.
    """
    prune = radius + prune_slack
    ga, gb = group._gen_a, group._gen_b
    m = ga.size

    A = [np.array([1.0 + 0j])]
    B = [np.array([0j])]
    P = [np.array([complex(z0)])]
    D = [np.array([0.0])]
    parents = [np.array([-1], dtype=np.int64)]
    gens = [np.array([-1], dtype=np.int8)]

    visited = _pack_keys(P[0])
    frontier = np.array([0], dtype=np.int64)
    fa, fb = A[0], B[0]
    total = 1
    while frontier.size:
        ca = (fa[:, None] * ga[None, :] + fb[:, None] * gb.conj()[None, :]).ravel()
        cb = (fa[:, None] * gb[None, :] + fb[:, None] * ga.conj()[None, :]).ravel()
        cpar = np.repeat(frontier, m)
        cgen = np.tile(np.arange(m, dtype=np.int8), frontier.size)
        cp = np.asarray(dm.mobius_apply(ca, cb, complex(z0)))
        cd = np.asarray(dm.dist(cp, complex(z0)))

        near = cd <= prune
        ca, cb, cp, cd = ca[near], cb[near], cp[near], cd[near]
        cpar, cgen = cpar[near], cgen[near]

        keys = _pack_keys(cp)
        _, first = np.unique(keys, return_index=True)
        fresh = np.zeros(keys.size, dtype=bool)
        fresh[first] = True
        fresh &= ~np.isin(keys, visited)

        if not fresh.any():
            break
        idx0 = total
        total += int(fresh.sum())
        if total > budget:
            raise OrbitBudgetError(
                f"orbit budget exceeded ({total} elements, budget {budget})"
            )
        A.append(ca[fresh])
        B.append(cb[fresh])
        P.append(cp[fresh])
        D.append(cd[fresh])
        parents.append(cpar[fresh])
        gens.append(cgen[fresh])
        visited = np.union1d(visited, keys[fresh])
        fa, fb = ca[fresh], cb[fresh]
        frontier = np.arange(idx0, total, dtype=np.int64)

    P = np.concatenate(P)
    D = np.concatenate(D)
    parents = np.concatenate(parents)
    gens = np.concatenate(gens)
    kept = np.nonzero(D <= radius + 1e-12)[0]
    return P, D, parents, gens, kept


def _default_slack(domain):
    if domain is None:
        return 2.0 * OCTAGON_VERTEX_RADIUS * 2.0
    return 2.0 * domain.diameter


def orbit_points(group, p, radius, *, budget=6_000_000, domain=None, prune_slack=None):
    """Complex coordinates of the orbit points g . p with d(g.p, p) <= radius.

    Deduplicated within 1e-9; results are cached (the group and its orbits
    are immutable, so the lock only guards the dict).
    """
    z0 = p.z if isinstance(p, DiskPoint) else complex(p)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if prune_slack is None:
        prune_slack = _default_slack(domain)
    key = (
        group.cache_key(),
        round(z0.real, 12),
        round(z0.imag, 12),
        round(float(radius), 9),
        round(float(prune_slack), 9),
    )
    with _ORBIT_LOCK:
        hit = _ORBIT_CACHE.get(key)
    if hit is not None:
        return hit.copy()
    P, _, _, _, kept = _orbit_bfs(group, z0, radius, budget, prune_slack)
    out = P[kept]
    with _ORBIT_LOCK:
        _ORBIT_CACHE[key] = out.copy()
    return out


def orbit_ball(group, p, radius, *, budget=6_000_000, domain=None, prune_slack=None):
    """Orbit points with their words: list of (DiskPoint, word), BFS order.

    Contains exactly the g . p with d(g.p, p) <= radius, the base point first
    with the empty word.
    """
    z0 = p.z if isinstance(p, DiskPoint) else complex(p)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if prune_slack is None:
        prune_slack = _default_slack(domain)
    P, _, parents, gens, kept = _orbit_bfs(group, z0, radius, budget, prune_slack)
    out = []
    for i in kept:
        word = []
        j = int(i)
        while j > 0:
            word.append(int(gens[j]))
            j = int(parents[j])
        out.append((DiskPoint(complex(P[i])), tuple(reversed(word))))
    return out


class EquivariantPotential:
    """Covering-group-equivariant, 1-periodic-in-time bump potential.

    V(x, t) = (1 + A cos 2 pi t) * sum over orbit bumps of
              -depth * (1 - (d/r)^2)^3   on d < r, else 0,

    with d the hyperbolic distance from x to the bump's orbit center.  The
    profile is C^2 at the support boundary.  V <= 0 everywhere, V(., t+1) =
    V(., t) exactly (time enters reduced mod 1), and V(g . x, t) = V(x, t)
    for every generator: evaluation reduces x to the Dirichlet domain and
    sums the bumps whose supports can touch the closed domain, which makes
    the equivariant sum exact rather than truncated.
    """

    def __init__(
        self,
        group,
        centers,
        depth,
        bump_radius,
        time_amplitude=0.0,
        orbit_cutoff=None,
        domain=None,
    ):
        if depth <= 0:
            raise ValueError("depth must be positive")
        if bump_radius <= 0:
            raise ValueError("bump_radius must be positive")
        if not 0.0 <= time_amplitude < 1.0:
            raise ValueError("time_amplitude must lie in [0, 1)")
        self.group = group
        self.domain = domain
        self.centers = tuple(
            c if isinstance(c, DiskPoint) else DiskPoint(complex(c)) for c in centers
        )
        if not self.centers:
            raise ValueError("at least one bump center is required")
        self.depth = float(depth)
        self.bump_radius = float(bump_radius)
        self.time_amplitude = float(time_amplitude)
        if orbit_cutoff is None:
            if domain is None:
                raise ValueError("orbit_cutoff is required without a fundamental domain")
            orbit_cutoff = bump_radius + domain.diameter
        self.orbit_cutoff = float(orbit_cutoff)

        if domain is not None:
            for c in self.centers:
                if not in_dirichlet_domain(group, c, tol=1e-9):
                    raise ValueError(f"bump center {c.z!r} is not inside the domain")

        pieces = []
        for c in self.centers:
            pts = orbit_points(group, c, self.orbit_cutoff, domain=domain)
            if domain is not None:
                # only bumps whose support can touch the closed domain matter
                # once evaluation points are reduced
                reach = self.bump_radius + domain.vertex_radius + 1e-9
                pts = pts[np.asarray(dm.dist(pts, 0j)) <= reach]
            pieces.append(pts)
        self._bumps = np.concatenate(pieces)
        if self._bumps.size >= 2:
            dmat = np.asarray(dm.dist(self._bumps[:, None], self._bumps[None, :]))
            np.fill_diagonal(dmat, np.inf)
            if float(dmat.min()) < 2.0 * self.bump_radius:
                raise ValueError(
                    "bump supports overlap; the depth ledger assumes disjoint bumps"
                )

    @property
    def v_min(self):
        """Greatest lower bound of V (disjoint bumps: one bump at full swing)."""
        return -self.depth * (1.0 + self.time_amplitude)

    def _time_factor(self, t):
        t = np.asarray(t, dtype=float)
        frac = t - np.floor(t)
        return 1.0 + self.time_amplitude * np.cos(2.0 * math.pi * frac)

    def value_z(self, z, t):
        """V at raw coordinates; z may be an array, t broadcasts against it."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zr, _ = _reduce_array(self.group, z)
        u = np.asarray(dm.dist(zr[:, None], self._bumps[None, :]))
        w = 1.0 - (u / self.bump_radius) ** 2
        phi = np.where(w > 0.0, w**3, 0.0)
        space = -self.depth * phi.sum(axis=1)
        return self._time_factor(t) * space

    def value_and_grad_z(self, z, t):
        """V and its metric gradient (complex coordinate vectors) at z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zr, dfac = _reduce_array(self.group, z)
        u = np.asarray(dm.dist(zr[:, None], self._bumps[None, :]))
        w = 1.0 - (u / self.bump_radius) ** 2
        pos = w > 0.0
        phi = np.where(pos, w**3, 0.0)
        space = -self.depth * phi.sum(axis=1)
        tau = self._time_factor(t)

        # d/dx of -depth*phi(d(x, c)) = depth * 6 d / r^2 * w^2 * grad_x d
        # and grad_x d(x, c) = -log_map(x, c)/d, so the d factors cancel.
        logs = dm.log_map(zr[:, None], self._bumps[None, :])
        coef = np.where(pos, w**2, 0.0) * (-6.0 * self.depth / self.bump_radius**2)
        grad_red = (coef * logs).sum(axis=1)
        grad = tau * grad_red / dfac
        return tau * space, grad

    def grad_z(self, z, t):
        return self.value_and_grad_z(z, t)[1]


def potential_value(pot, x: DiskPoint, t) -> float:
    """V(x, t)."""
    return float(pot.value_z(x.z, t)[0])


def potential_gradient(pot, x: DiskPoint, t) -> TangentVec:
    """Hyperbolic-metric gradient of V at (x, t)."""
    return TangentVec(x, complex(pot.grad_z(x.z, t)[0]))
