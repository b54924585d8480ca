"""The constant ledger tying average speed to quasi-geodesic constants.

Pipeline, for a mechanical ledger (C = 1/2, V_min <= 0):

    m   = min over K of C_K^max          (attained at K = sqrt(2 |V_min|))
    K0  = 28 m / C                        (threshold below which nothing is claimed)
    K'  = largest K/2^j with 7 C_{2K'}^max < C K / 4
    N0  = the even integer with K/K' <= N0/2 < K/K' + 1
    k'' = C K'^2 / (4 C_{K''}^max)        (K'' measured, not derived)
    lam = max(K'', 1/k'', 1),   eps = N0 / lam

K'' is an empirical speed bound: the sup of observed minimizer speeds with a
safety factor, since no closed form is available.  kappa (the shadowing
distance bound) is likewise estimated from experiments, never asserted
a priori.
"""

import math
from dataclasses import dataclass, asdict

from .errors import ThresholdError
from .mechanics import ActionBoundLedger


@dataclass(frozen=True)
class QGConstants:
    """Everything the windowed speed and quasi-geodesic assertions need."""

    C: float
    m: float
    K0: float
    K: float
    K_prime: float
    K_dprime: float
    N0: int
    k_dprime: float
    lam: float
    eps: float
    kappa: float | None = None

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["epsilon"] = d.pop("eps")
        return d

    def identity_residuals(self, ledger: ActionBoundLedger):
        """Exact-arithmetic identities of the ledger, as residuals."""
        r = {
            "K0": abs(self.K0 - 28.0 * self.m / self.C),
            "k_dprime": abs(
                self.k_dprime
                - self.C * self.K_prime**2 / (4.0 * ledger.c_k_max(self.K_dprime))
            ),
            "lambda": abs(self.lam - max(self.K_dprime, 1.0 / self.k_dprime, 1.0)),
            "epsilon": abs(self.eps - self.N0 / self.lam),
            "N0_even": float(self.N0 % 2),
        }
        ratio = self.K / self.K_prime
        r["N0_window"] = 0.0 if ratio <= self.N0 / 2 < ratio + 1 else 1.0
        return r


def n0_for(K, K_prime) -> int:
    """The even window length: K/K' <= N0/2 < K/K' + 1."""
    if K_prime <= 0 or K <= 0:
        raise ValueError("speeds must be positive")
    return 2 * math.ceil(K / K_prime)


def k0_threshold(ledger: ActionBoundLedger) -> float:
    """28 m / C with m the minimum of C_K^max over speeds."""
    return 28.0 * ledger.min_c_k_max() / ledger.C


def select_k_prime(ledger: ActionBoundLedger, K, max_halvings=60) -> float:
    """Largest K/2^j satisfying 7 C_{2K'}^max < C K / 4.

    The geometric grid keeps N0 as small as the two-sided condition allows.
    """
    target = ledger.C * K / 4.0
    for j in range(1, max_halvings + 1):
        kp = K / 2.0**j
        if 7.0 * ledger.c_k_max(2.0 * kp) < target:
            return kp
    raise ThresholdError(
        f"no admissible K' on the geometric grid below K = {K!r}"
    )


def compute_constants(
    ledger: ActionBoundLedger, K, K_dprime, K_prime=None, kappa=None
) -> QGConstants:
    """Assemble the ledger for total average speed K.

    With K_prime omitted, K must exceed the threshold K0 and K' is selected
    from the geometric grid.  Passing K_prime explicitly skips the gate and
    plugs the formulas directly (the grid inequality is then the caller's
    responsibility).  K_dprime is the externally measured speed bound.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    if K_dprime <= 0:
        raise ValueError("K_dprime must be positive")
    m = ledger.min_c_k_max()
    K0 = 28.0 * m / ledger.C
    if K_prime is None:
        if K <= K0:
            raise ThresholdError(
                f"K = {K!r} does not exceed the ledger threshold K0 = {K0!r}"
            )
        K_prime = select_k_prime(ledger, K)
    if not 0 < K_prime < K:
        raise ValueError("need 0 < K_prime < K")
    N0 = n0_for(K, K_prime)
    k_dprime = ledger.C * K_prime**2 / (4.0 * ledger.c_k_max(K_dprime))
    lam = max(K_dprime, 1.0 / k_dprime, 1.0)
    eps = N0 / lam
    return QGConstants(
        C=ledger.C,
        m=m,
        K0=K0,
        K=float(K),
        K_prime=float(K_prime),
        K_dprime=float(K_dprime),
        N0=N0,
        k_dprime=k_dprime,
        lam=lam,
        eps=eps,
        kappa=kappa,
    )


def measured_speed_bound(curves, safety=1.1) -> float:
    """Empirical speed cap: max observed speed over an ensemble, with margin."""
    if not curves:
        raise ValueError("empty ensemble")
    return safety * max(c.max_speed() for c in curves)
