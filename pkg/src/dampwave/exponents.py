"""Critical exponents, the admissible set S_N and lifespan-bound exponents.

All functions are closed-form and side-effect free.  The Strauss exponent of
dimension one is infinite; it is returned as :data:`INFINITY`, an enum member,
so that it can never leak into float arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import EmptySet, InvalidParams, OutsideTheorem

DEFAULT_TOL = 1e-9


class Unbounded(enum.Enum):
    INFINITY = "inf"

    def __str__(self) -> str:
        return "inf"


INFINITY = Unbounded.INFINITY


class Tag(enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    OUTSIDE = "OutsideTheorem"


class Branch(enum.Enum):
    """Rows of the lifespan table (and of the sup S_N table)."""

    N1_INV_P = "N=1, max{3,2/mu} <= p < p0(1+mu)"
    N1_HALF_MU = "N=1, 0<mu<2/3, 3 <= p < 2/mu"
    NGE2_INV_P = "N>=2, p0(N+2+mu) <= p < p0(N+mu)"
    NGE2_LINEAR = "N>=2, pF(N) <= p < p0(N+2+mu)"
    CRITICAL = "p = p0(N+mu)"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class ProblemClass:
    N: int
    mu: float
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParams(f"N must be a positive integer, got {self.N!r}")
        if not self.mu >= 0:
            raise InvalidParams(f"mu must be >= 0, got {self.mu!r}")
        if not self.p > 1:
            raise InvalidParams(f"p must be > 1, got {self.p!r}")


@dataclass(frozen=True)
class Regime:
    tag: Tag
    branch: Branch
    reason: str = ""


@dataclass(frozen=True)
class SupSNResult:
    interval: tuple[float, float] | None
    sup_value: float
    branch: Branch


@dataclass(frozen=True)
class LifespanBound:
    """Upper bound for the lifespan.

    ``exponent`` is the power of 1/eps in the subcritical case and the
    argument of the outer exponential in the critical case.
    """

    value: float
    exponent: float
    regime: Regime


def gamma_poly(n: float, p: float) -> float:
    return 2.0 + (n + 1.0) * p - (n - 1.0) * p * p


def strauss_exponent(n: float) -> float | Unbounded:
    if n < 1:
        raise InvalidParams(f"strauss_exponent needs n >= 1, got {n!r}")
    if n == 1:
        return INFINITY
    return ((n + 1.0) + math.sqrt((n + 1.0) ** 2 + 8.0 * (n - 1.0))) / (2.0 * (n - 1.0))


def below_strauss(p: float, n: float) -> bool:
    """Return ``p < p0(n)``, valid for infinite p0."""
    p0 = strauss_exponent(n)
    return p0 is INFINITY or p < p0


def fujita_exponent(N: int) -> float:
    return 1.0 + 2.0 / N


def mu_star(N: int) -> float:
    return (N * N + N + 2.0) / (N + 2.0)


def _mu_admissible(N: int, mu: float) -> bool:
    if N == 1:
        return 0.0 < mu < 4.0 / 3.0
    return 0.0 <= mu < mu_star(N)


def _sn_intervals(pc: ProblemClass) -> list[tuple[float, float]]:
    N, mu, p = pc.N, pc.mu, pc.p
    return [
        (0.0, 1.0 / p),
        (0.0, (N - abs(1.0 - mu)) / 2.0),
        (((N - 1 + mu) * p - (N + 1 + mu)) / 2.0, ((N + 1 + mu) * p - (N + 3 + mu)) / 2.0),
    ]


def sn_intersection(pc: ProblemClass) -> tuple[float, float] | None:
    """Intersection of the three open intervals defining S_N, or None."""
    ivs = _sn_intervals(pc)
    lo = max(a for a, _ in ivs)
    hi = min(b for _, b in ivs)
    return (lo, hi) if lo < hi else None


def _in_sn_table_range(pc: ProblemClass) -> bool:
    return (_mu_admissible(pc.N, pc.mu)
            and pc.p >= fujita_exponent(pc.N)
            and below_strauss(pc.p, pc.N + pc.mu))


def admissible_set_SN(pc: ProblemClass) -> SupSNResult:
    interval = sn_intersection(pc)
    if not _in_sn_table_range(pc):
        if interval is None:
            raise EmptySet(f"S_N is empty for {pc}")
        return SupSNResult(interval, interval[1], Branch.OUTSIDE)

    N, mu, p = pc.N, pc.mu, pc.p
    if N == 1:
        if p >= max(3.0, 2.0 / mu):
            branch, sup = Branch.N1_INV_P, 1.0 / p
        else:
            branch, sup = Branch.N1_HALF_MU, mu / 2.0
    elif below_strauss(p, N + 2 + mu):
        branch, sup = Branch.NGE2_LINEAR, ((N + 1 + mu) * p - (N + 3 + mu)) / 2.0
    else:
        branch, sup = Branch.NGE2_INV_P, 1.0 / p
    if interval is None:
        raise EmptySet(f"S_N is empty for {pc} although (N, mu, p) lies in the covered range")
    return SupSNResult(interval, sup, branch)


def pipeline_lambda(pc: ProblemClass, inv_q: float) -> float:
    """Growth rate lambda = gamma(N+mu;p)/(2p) - 1/p + 1/q of the subcritical argument."""
    return gamma_poly(pc.N + pc.mu, pc.p) / (2.0 * pc.p) - 1.0 / pc.p + inv_q


def theta_exponent(pc: ProblemClass) -> float:
    sup = admissible_set_SN(pc).sup_value
    denom = pipeline_lambda(pc, sup)
    if denom <= 0:
        return math.inf
    return (pc.p - 1.0) / denom


def classify_regime(pc: ProblemClass, tol: float = DEFAULT_TOL) -> Regime:
    if not tol > 0:
        raise InvalidParams("tol must be positive")
    N, mu, p = pc.N, pc.mu, pc.p
    if not _mu_admissible(N, mu):
        bound = "0 < mu < 4/3" if N == 1 else f"0 <= mu < mu*={mu_star(N):.6g}"
        return Regime(Tag.OUTSIDE, Branch.OUTSIDE, f"damping outside {bound}")
    p0 = strauss_exponent(N + mu)
    if p0 is not INFINITY and abs(p - p0) <= tol * p0:
        return Regime(Tag.CRITICAL, Branch.CRITICAL)
    if p < fujita_exponent(N):
        return Regime(Tag.OUTSIDE, Branch.OUTSIDE, "p below the Fujita exponent")
    if not below_strauss(p, N + mu):
        return Regime(Tag.OUTSIDE, Branch.OUTSIDE, "p above the Strauss exponent p0(N+mu)")
    return Regime(Tag.SUBCRITICAL, admissible_set_SN(pc).branch)


def theorem_exponent(pc: ProblemClass, tol: float = DEFAULT_TOL) -> float:
    """Power of 1/eps in the stated subcritical lifespan bound (delta excluded).

    For the critical regime this is p(p-1), the power inside the exponential.
    """
    regime = classify_regime(pc, tol)
    p = pc.p
    if regime.tag is Tag.OUTSIDE:
        raise OutsideTheorem(f"{pc}: {regime.reason}")
    if regime.tag is Tag.CRITICAL:
        return p * (p - 1.0)
    if regime.branch is Branch.N1_HALF_MU:
        return 2.0 * (p - 1.0) / pc.mu
    if regime.branch is Branch.NGE2_LINEAR:
        return 1.0
    return 2.0 * p * (p - 1.0) / gamma_poly(pc.N + pc.mu, p)


def lifespan_bound(pc: ProblemClass, eps: float, delta: float = 0.0, C: float = 1.0,
                   tol: float = DEFAULT_TOL) -> LifespanBound:
    if not (eps > 0 and delta >= 0 and C > 0):
        raise InvalidParams("need eps > 0, delta >= 0, C > 0")
    regime = classify_regime(pc, tol)
    k = theorem_exponent(pc, tol)
    if regime.tag is Tag.CRITICAL:
        arg = C * eps ** (-k)
        try:
            value = C * math.exp(arg)
        except OverflowError:
            value = math.inf
        return LifespanBound(value, arg, regime)
    exponent = k + delta
    return LifespanBound(C * eps ** (-exponent), exponent, regime)


def exponent_table(pc: ProblemClass, tol: float = DEFAULT_TOL) -> dict:
    """Everything the ``exponents`` subcommand prints, with its fixed key names."""
    p0 = strauss_exponent(pc.N + pc.mu)
    try:
        sn = admissible_set_SN(pc)
        interval = list(sn.interval) if sn.interval else None
        sup = sn.sup_value
        theta = theta_exponent(pc)
    except EmptySet:
        interval, sup, theta = None, None, None
    regime = classify_regime(pc, tol)
    return {
        "gamma": gamma_poly(pc.N + pc.mu, pc.p),
        "p_fujita": fujita_exponent(pc.N),
        "p_strauss": "inf" if p0 is INFINITY else p0,
        "mu_star": mu_star(pc.N),
        "S_interval": interval,
        "sup_S": sup,
        "theta": theta,
        "regime": regime.tag.value,
        "branch": regime.branch.value,
    }
