"""Self-similar test functions built from 2F1 and numerical checks of their identities.

    psi_{beta,mu}(z)   = F(beta/2, (beta-1+mu)/2; N/2; z)
    Psi_{beta,mu}(r,t) = (1+t)^(-beta) psi_{beta,mu}(r^2/(1+t)^2)
    Phi_beta(r,t)      = (1+t) Psi_{beta,mu}(r,t)

Everything is radial; ``r`` stands for |x|.  Psi and Phi live on the cone
Q1 = {r < 1+t}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NumericalError, WrongRegime
from .hypergeom import HypergeomParams, derivative_values, hyp2f1_values

CONTIGUOUS_TOL = 1e-8
TIME_DERIVATIVE_TOL = 1e-7
DUAL_RESIDUAL_TOL = 1e-5
RICHARDSON_RANGE = (3.5, 4.5)
Z_SCAN_END = 1e-4


class ConeDomain(enum.Enum):
    Q0 = "Q0"
    Q1 = "Q1"

    def contains(self, r, t):
        r, t = np.asarray(r), np.asarray(t)
        edge = t if self is ConeDomain.Q0 else 1.0 + t
        return (r >= 0) & (r < edge)


@dataclass(frozen=True)
class TestFunctionFamily:
    __test__ = False  # keep pytest from collecting this class

    beta: float
    mu: float
    N: int
    series_tol: float = 1e-15
    max_terms: int = 10_000
    z_split: float = 0.5

    def __post_init__(self):
        if not self.beta > 0:
            raise WrongRegime(f"beta must be positive, got {self.beta!r}")

    @property
    def params(self) -> HypergeomParams:
        return HypergeomParams(self.beta / 2.0, (self.beta - 1.0 + self.mu) / 2.0, self.N / 2.0,
                               self.series_tol, self.max_terms, self.z_split)

    def raised(self) -> "TestFunctionFamily":
        """The family (beta+2, mu-2) appearing in the time-derivative identity."""
        return replace(self, beta=self.beta + 2.0, mu=self.mu - 2.0)

    @property
    def critical_beta(self) -> float:
        """(N+1-mu)/2, the edge between bounded and singular psi near z = 1."""
        return (self.N + 1.0 - self.mu) / 2.0


def psi(fam: TestFunctionFamily, z):
    return hyp2f1_values(fam.params, z)


def psi_prime(fam: TestFunctionFamily, z):
    return derivative_values(fam.params, z, 1)


def psi_tilde(fam: TestFunctionFamily, z):
    return 2.0 * fam.beta * psi(fam.raised(), z) + (fam.mu - 2.0) * psi(fam, z)


def _cone_z(r, t):
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r >= 1.0 + t) or np.any(r < 0):
        raise DomainError("point outside Q1 = {0 <= r < 1+t}")
    return (r / (1.0 + t)) ** 2


def Psi(fam: TestFunctionFamily, r, t):
    z = _cone_z(r, t)
    out = (1.0 + np.asarray(t, dtype=float)) ** (-fam.beta) * psi(fam, z)
    return out if np.ndim(out) else float(out)


def Phi(fam: TestFunctionFamily, r, t):
    z = _cone_z(r, t)
    out = (1.0 + np.asarray(t, dtype=float)) ** (1.0 - fam.beta) * psi(fam, z)
    return out if np.ndim(out) else float(out)


def self_similar(fam: TestFunctionFamily, r, t):
    """t^(-beta) psi(r^2/t^2) on Q0, the unshifted self-similar profile."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if not np.all(ConeDomain.Q0.contains(r, t)):
        raise DomainError("point outside Q0 = {r < t}")
    return t ** (-fam.beta) * psi(fam, (r / t) ** 2)


def check_contiguous_identity(fam: TestFunctionFamily, z_grid) -> float:
    """max |beta psi + 2 z psi' - beta psi_{beta+2,mu-2}| over the grid."""
    z = np.asarray(z_grid, dtype=float)
    lhs = fam.beta * psi(fam, z) + 2.0 * z * psi_prime(fam, z)
    rhs = fam.beta * psi(fam.raised(), z)
    return float(np.max(np.abs(lhs - rhs)))


def cone_samples(n: int, seed: int = 0, t_max: float = 3.0, z_max: float = 0.9):
    """Deterministic random (r, t) pairs inside Q1 with r^2/(1+t)^2 <= z_max."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, t_max, n)
    z = rng.uniform(0.0, z_max, n)
    return np.sqrt(z) * (1.0 + t), t


def check_time_derivative_identity(fam: TestFunctionFamily, samples, h: float = 1e-5) -> float:
    """Max relative gap between centred d/dt Psi_{beta,mu} and -beta(1+t)Psi_{beta+2,mu-2}.

    ``samples`` is a pair of arrays (r, t); t must be at least h.
    """
    r, t = (np.asarray(s, dtype=float) for s in samples)
    t = np.maximum(t, h)
    fd = (Psi(fam, r, t + h) - Psi(fam, r, t - h)) / (2.0 * h)
    exact = -fam.beta * (1.0 + t) * Psi(fam.raised(), r, t)
    return float(np.max(np.abs(fd - exact) / np.abs(exact)))


def monotonicity_gaps(fam: TestFunctionFamily, z_grid) -> np.ndarray:
    """psi_{beta+2,mu-2} - psi_{beta,mu}; nonnegative wherever the identity holds."""
    z = np.asarray(z_grid, dtype=float)
    return psi(fam.raised(), z) - psi(fam, z)


def dual_residual(fam: TestFunctionFamily, r, t, h: float):
    """Second-order central-difference residual of the conjugate operator on Phi.

        Phi_tt - Phi_rr - (N-1)/r Phi_r - d/dt(mu Phi/(1+t))

    r = 0 uses the even reflection, where the Laplacian is 2N(Phi(h) - Phi(0))/h^2.
    """
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any(r + h >= 1.0 + t - h) or np.any(t - h < 0) or np.any((r > 0) & (r < h)):
        raise DomainError("difference stencil leaves Q1")
    mu = fam.mu
    c = Phi(fam, r, t)
    tp, tm = Phi(fam, r, t + h), Phi(fam, r, t - h)
    rp = Phi(fam, r + h, t)
    rm = Phi(fam, np.abs(r - h), t)
    phi_tt = (tp - 2.0 * c + tm) / h**2
    axis = r == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = (rp - 2.0 * c + rm) / h**2 + (fam.N - 1) / r * (rp - rm) / (2.0 * h)
    lap = np.where(axis, 2.0 * fam.N * (rp - c) / h**2, lap)
    damp = (mu * tp / (1.0 + t + h) - mu * tm / (1.0 + t - h)) / (2.0 * h)
    return phi_tt - lap - damp


@dataclass(frozen=True)
class DualCheck:
    residual: float
    ratio_step: float
    residual_coarse: float
    residual_half: float
    ratio: float


def check_dual_equation(fam: TestFunctionFamily, r_range=(0.1, 0.8), t_range=(0.5, 1.5),
                        h: float = 1e-3, ratio_step: float = 1e-2, n: int = 15) -> DualCheck:
    """Max residual on an n x n patch at step h, plus the convergence ratio.

    The ratio compares steps ``ratio_step`` and ``ratio_step/2``; at h = 1e-3
    the truncation error is already close to the roundoff floor of the
    second differences, which would blur the ratio.
    """
    r = np.linspace(*r_range, n)
    t = np.linspace(*t_range, n)
    rr, tt = np.meshgrid(r, t)

    def worst(step):
        return float(np.max(np.abs(dual_residual(fam, rr, tt, step))))

    coarse, half = worst(ratio_step), worst(ratio_step / 2.0)
    ratio = coarse / half if half > 0 else math.inf
    return DualCheck(worst(h), ratio_step, coarse, half, ratio)


@dataclass(frozen=True)
class BoundConstants:
    c_lower: float
    c_upper: float
    regime: str  # "ii" (bounded psi) or "iii" (singular at z = 1)


def bound_regime(fam: TestFunctionFamily) -> str:
    edge = fam.critical_beta
    if abs(fam.beta - edge) <= 1e-9:
        raise WrongRegime(f"beta = (N+1-mu)/2 = {edge} is the uncovered boundary case")
    if fam.beta > edge:
        return "iii"
    if abs(fam.beta - 1.0 + fam.mu) <= 1e-12 or fam.beta > max(0.0, 1.0 - fam.mu):
        return "ii"
    raise WrongRegime(f"beta={fam.beta} is not above max(0, 1-mu)")


def estimate_bound_constants(fam: TestFunctionFamily, n: int = 400) -> BoundConstants:
    """Empirical constants of the two-sided bounds for psi on [0, 1 - 1e-4]."""
    regime = bound_regime(fam)
    z = np.concatenate([np.linspace(0.0, 0.5, n // 4, endpoint=False),
                        1.0 - np.geomspace(0.5, Z_SCAN_END, n - n // 4)])
    vals = psi(fam, z)
    if regime == "ii":
        lo, hi = float(vals.min()), float(vals.max())
        if lo < 1.0 - 1e-9:
            raise NumericalError(f"psi dipped below 1 (min {lo}) in the bounded regime")
        return BoundConstants(lo, hi, regime)
    ratio = vals * (1.0 - np.sqrt(z)) ** (fam.beta - fam.critical_beta)
    lo, hi = float(ratio.min()), float(ratio.max())
    if not (np.all(np.isfinite(ratio)) and lo > 0):
        raise NumericalError("singular-regime ratio is not finite and positive")
    return BoundConstants(lo, hi, regime)


def identity_report(fam: TestFunctionFamily, seed: int = 0, n_samples: int = 20) -> dict:
    """Run every identity check for one family; the ``verify-identities`` payload."""
    z_grid = np.round(np.arange(1, 20) * 0.05, 12)
    contiguous = check_contiguous_identity(fam, z_grid)
    time_deriv = check_time_derivative_identity(fam, cone_samples(n_samples, seed))
    gaps = monotonicity_gaps(fam, z_grid)
    dual = check_dual_equation(fam)
    report = {
        "family": {"beta": fam.beta, "mu": fam.mu, "N": fam.N},
        "contiguous": {"max_error": contiguous, "tol": CONTIGUOUS_TOL,
                       "pass": contiguous < CONTIGUOUS_TOL},
        "time_derivative": {"max_rel_error": time_deriv, "tol": TIME_DERIVATIVE_TOL,
                            "pass": time_deriv < TIME_DERIVATIVE_TOL},
        "monotonicity": {"min_gap": float(gaps.min()), "pass": bool(gaps.min() >= -1e-12)},
        "dual_equation": {"residual": dual.residual, "ratio_step": dual.ratio_step,
                          "ratio": dual.ratio, "tol": DUAL_RESIDUAL_TOL,
                          "ratio_range": list(RICHARDSON_RANGE),
                          "pass": dual.residual < DUAL_RESIDUAL_TOL
                          and RICHARDSON_RANGE[0] <= dual.ratio <= RICHARDSON_RANGE[1]},
    }
    try:
        b = estimate_bound_constants(fam)
        report["bounds"] = {"regime": b.regime, "c_lower": b.c_lower, "c_upper": b.c_upper,
                            "pass": True}
    except (WrongRegime, NumericalError) as exc:
        report["bounds"] = {"regime": None, "error": str(exc), "pass": False}
    report["pass"] = all(v["pass"] for k, v in report.items() if isinstance(v, dict) and "pass" in v)
    return report
