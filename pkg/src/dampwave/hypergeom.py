"""Gauss hypergeometric function 2F1(a, b; c; z) for real parameters and 0 <= z < 1.

For z <= z_split the defining power series is summed directly.  Above the
split the standard connection formula in (1 - z) is used,

    F(a,b;c;z) = A F(a,b;a+b-c+1;1-z) + B (1-z)^(c-a-b) F(c-a,c-b;c-a-b+1;1-z),

with A = G(c)G(c-a-b)/(G(c-a)G(c-b)) and B = G(c)G(a+b-c)/(G(a)G(b)).  When
c-a-b is (nearly) an integer the formula degenerates; we then keep summing the
direct series, which converges for every z < 1, and only if that runs out of
terms do we shift b by 1e-7 and report the shift.

Scalar entry points return :class:`EvalResult`; :func:`hyp2f1_values` is the
vectorised workhorse used by the test-function code.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParams, NoConvergence

INTEGER_GAP = 1e-6
B_SHIFT = 1e-7


class Method(enum.Enum):
    DIRECT = "DirectSeries"
    TRANSFORMED = "TransformedSeries"


@dataclass(frozen=True)
class HypergeomParams:
    a: float
    b: float
    c: float
    series_tol: float = 1e-15
    max_terms: int = 10_000
    z_split: float = 0.5

    def __post_init__(self):
        if _is_nonpositive_integer(self.c):
            raise InvalidParams(f"c must not be zero or a negative integer (c={self.c!r})")
        if not self.series_tol > 0:
            raise InvalidParams("series_tol must be positive")
        if not 0.0 < self.z_split < 1.0:
            raise InvalidParams("z_split must lie in (0, 1)")
        if self.max_terms < 1:
            raise InvalidParams("max_terms must be positive")

    def shifted(self, da: float = 0.0, db: float = 0.0, dc: float = 0.0) -> "HypergeomParams":
        return replace(self, a=self.a + da, b=self.b + db, c=self.c + dc)


@dataclass(frozen=True)
class EvalResult:
    value: float
    terms_used: int
    method: Method
    truncation_estimate: float
    b_shift: float = 0.0


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _rgamma(x: float) -> float:
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / math.gamma(x)


def pochhammer(d: float, n: int) -> float:
    """Rising factorial (d)_n = d (d+1) ... (d+n-1)."""
    if n < 0:
        raise InvalidParams("n must be nonnegative")
    out = 1.0
    for k in range(n):
        out *= d + k
    return out


def _terminates(p: HypergeomParams) -> bool:
    return _is_nonpositive_integer(p.a) or _is_nonpositive_integer(p.b)


def _series(a, b, c, x, tol, max_terms, *, must_converge=True):
    """Sum sum_n (a)_n (b)_n / ((c)_n n!) x^n elementwise.

    Returns (sum, terms_used, tail_bound, converged_mask).  The tail bound
    assumes the term ratios are eventually monotone in n, which holds for
    every real parameter triple once n exceeds |a|, |b|, |c|.
    """
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    comp = np.zeros_like(x)
    term = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    tail = np.zeros_like(x)
    n_used = 1
    for n in range(max_terms - 1):
        coef = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        if coef == 0.0:
            return total + comp, n + 1, np.zeros_like(x), np.ones(x.shape, dtype=bool)
        term = np.where(done, 0.0, term * coef * x)
        # Neumaier compensated summation
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
        n_used = n + 2
        nxt = (a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0))
        # past the hump of the terms the ratio tends to x from above or below
        if n + 1 > max(abs(a), abs(b), abs(c)):
            r = max(abs(nxt), 1.0) * x
            with np.errstate(divide="ignore", invalid="ignore"):
                est = np.where(r < 1.0, np.abs(term) * r / (1.0 - r), np.inf)
            newly = (~done) & (est <= tol * np.abs(total))
            tail = np.where(newly, est, tail)
            done |= newly
            if done.all():
                return total + comp, n_used, tail, done
    if must_converge:
        raise NoConvergence(f"2F1({a}, {b}; {c}) series did not converge in {max_terms} terms")
    tail = np.where(done, tail, np.inf)
    return total + comp, n_used, tail, done


def _transformed(p: HypergeomParams, z):
    a, b, c = p.a, p.b, p.c
    s = c - a - b
    x = 1.0 - np.asarray(z, dtype=float)
    gc = math.gamma(c)
    coef_a = gc * math.gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    coef_b = gc * math.gamma(-s) * _rgamma(a) * _rgamma(b)
    v1, n1, t1, _ = _series(a, b, 1.0 - s, x, p.series_tol, p.max_terms)
    v2, n2, t2, _ = _series(c - a, c - b, 1.0 + s, x, p.series_tol, p.max_terms)
    xs = x ** s
    value = coef_a * v1 + coef_b * xs * v2
    tail = abs(coef_a) * t1 + abs(coef_b) * xs * t2
    return value, max(n1, n2), tail


def _near_integer(s: float) -> bool:
    return abs(s - round(s)) < INTEGER_GAP


def _evaluate(p: HypergeomParams, z):
    """Vectorised evaluation; returns (values, terms, transformed_mask, tail, b_shift)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z >= 1) or not np.all(np.isfinite(z)):
        raise InvalidParams("z must lie in [0, 1)")
    values = np.empty_like(z)
    tail = np.zeros_like(z)
    transformed = np.zeros(z.shape, dtype=bool)
    terms = 0
    shift = 0.0

    if _terminates(p):
        v, terms, t, _ = _series(p.a, p.b, p.c, z, p.series_tol, p.max_terms)
        return v, terms, transformed, t, shift

    low = z <= p.z_split
    if low.any():
        v, n, t, _ = _series(p.a, p.b, p.c, z[low], p.series_tol, p.max_terms)
        values[low], tail[low] = v, t
        terms = max(terms, n)
    high = ~low
    if high.any():
        zh = z[high]
        s = p.c - p.a - p.b
        if _near_integer(s):
            v, n, t, ok = _series(p.a, p.b, p.c, zh, p.series_tol, p.max_terms,
                                  must_converge=False)
            terms = max(terms, n)
            if not ok.all():
                # degenerate connection: shift b away from the integer case
                d = s - round(s)
                shift = -B_SHIFT if d >= 0 else B_SHIFT
                q = p.shifted(db=shift)
                vt, nt, tt = _transformed(q, zh[~ok])
                v[~ok], t[~ok] = vt, tt
                terms = max(terms, nt)
                sub = np.zeros(zh.shape, dtype=bool)
                sub[~ok] = True
                transformed[high] = sub
            values[high], tail[high] = v, t
        else:
            v, n, t = _transformed(p, zh)
            values[high], tail[high] = v, t
            transformed[high] = True
            terms = max(terms, n)
    return values, terms, transformed, tail, shift


def hyp2f1_values(p: HypergeomParams, z) -> np.ndarray:
    """F(a,b;c;z) for a scalar or array z in [0,1)."""
    values = _evaluate(p, np.atleast_1d(z))[0]
    return values if np.ndim(z) else float(values[0])


def hyp2f1(p: HypergeomParams, z: float) -> EvalResult:
    values, terms, transformed, tail, shift = _evaluate(p, np.atleast_1d(float(z)))
    method = Method.TRANSFORMED if transformed[0] else Method.DIRECT
    return EvalResult(float(values[0]), int(terms), method, float(tail[0]), shift)


def derivative_values(p: HypergeomParams, z, order: int = 1) -> np.ndarray:
    """k-th derivative via d^k/dz^k F = (a)_k (b)_k / (c)_k F(a+k, b+k; c+k; z)."""
    k = order
    scale = pochhammer(p.a, k) * pochhammer(p.b, k) / pochhammer(p.c, k)
    if scale == 0.0:
        return np.zeros(np.shape(z)) if np.ndim(z) else 0.0
    return scale * hyp2f1_values(p.shifted(k, k, k), z)


def hyp2f1_derivative(p: HypergeomParams, z: float) -> float:
    return float(derivative_values(p, float(z), 1))


def ode_residual_values(p: HypergeomParams, z) -> np.ndarray:
    """z(1-z)F'' + (c - (1+a+b)z)F' - abF, evaluated with the contiguous derivatives."""
    z = np.asarray(z, dtype=float)
    f0 = hyp2f1_values(p, z)
    f1 = derivative_values(p, z, 1)
    f2 = derivative_values(p, z, 2)
    return z * (1 - z) * f2 + (p.c - (1 + p.a + p.b) * z) * f1 - p.a * p.b * f0


def ode_residual(p: HypergeomParams, z: float) -> float:
    if not 0.0 < z < 1.0:
        raise InvalidParams("ode_residual needs z in (0, 1)")
    return float(ode_residual_values(p, z))
