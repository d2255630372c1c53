"""Integral functionals of numerical solutions tested against the self-similar profiles.

    G(t) = int |u|^p Phi_beta dx
    H(t) = int_0^t (t-s)(1+s) G(s) ds
    J(t) = int_0^t (1+s)^(-3) H(s) ds

together with the data moments E0, E1, the weighted-energy identity they
satisfy, the a-priori inequalities it feeds, and a standalone demonstration
of the ODE blowup criteria driving the lifespan bounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp, trapezoid
from scipy.special import roots_legendre

from .errors import DomainError, InsufficientData, InvalidParams, NoBlowup, PositivityViolated
from .testfunc import Phi, TestFunctionFamily, psi, psi_tilde
from .wavesolver import ModelParams, RunResult, Snapshots, data_profiles

TRICK_TOL = 1e-4
BASE_T0_TOL = 1e-10
BASE_TOL = 1e-2
LINEAR_BASE_TOL = 1e-3
HOLDER_FLOOR = -1e-10
SUPPORT_CUTOFF = 1e-12
DEFAULT_DELTA = 1e-3


def sphere_area(N: int) -> float:
    """|S^{N-1}| = 2 pi^(N/2) / Gamma(N/2); equals 2 for N = 1."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass
class FunctionalTrace:
    times: np.ndarray
    G: np.ndarray
    H: np.ndarray | None = None
    J: np.ndarray | None = None
    beta: float = math.nan
    quadrature_meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DataMoments:
    E0: float
    E1: float
    beta: float


def _cone_mask(r: np.ndarray, t: float, u: np.ndarray, r0: float) -> np.ndarray:
    """Nodes where Phi is evaluated: inside Q1 with room to spare.

    The solution support stays near r0 + t < 1 + t; anything above the cutoff
    beyond the chosen radius means the support has escaped the cone.
    """
    mask = r < 1.0 + t - 0.5 * (1.0 - r0)
    if np.any(np.abs(u[~mask]) > SUPPORT_CUTOFF):
        raise DomainError(f"solution support leaves the light cone at t={t}")
    return mask


def _radial_integral(values, r, N):
    """|S^{N-1}| int v(r) r^(N-1) dr by the trapezoid rule on a grid starting at the axis.

    For even N the integrand r^(N-1) v is odd, so the Euler-Maclaurin end terms
    at r = 0 do not cancel; the leading ones are added back (two for N = 2,
    one for N = 4), with v''(0) from the mirror-symmetric difference.  Odd N
    needs nothing: the integrand is even and the plain rule is spectrally
    accurate for smooth compactly supported v.
    """
    values = np.asarray(values, dtype=float)
    total = trapezoid(values * r ** (N - 1), r)
    if len(r) > 1 and r[0] == 0.0:
        h = r[1] - r[0]
        if N == 2:
            total += h * h / 12.0 * values[0] - h * h / 120.0 * (values[1] - values[0])
        elif N == 4:
            total -= h**4 / 120.0 * values[0]
    return sphere_area(N) * total


def _per_snapshot(snaps: Snapshots, r0: float, fn):
    out = np.empty(len(snaps.t))
    for k, (t, u) in enumerate(zip(snaps.t, snaps.u)):
        m = _cone_mask(snaps.r, t, u, r0)
        out[k] = fn(snaps.r[m], float(t), u[m])
    return out


def compute_G(snaps: Snapshots, fam: TestFunctionFamily, p: float, r0: float) -> FunctionalTrace:
    N = fam.N
    G = _per_snapshot(snaps, r0, lambda r, t, u: _radial_integral(np.abs(u) ** p * Phi(fam, r, t),
                                                                   r, N))
    return FunctionalTrace(np.asarray(snaps.t, dtype=float), G, beta=fam.beta,
                           quadrature_meta={"space": "trapezoid", "time": "cumulative trapezoid",
                                            "n_times": len(snaps.t), "dr": float(snaps.r[1])})


def _twice_integrated(values, t):
    """int_0^t int_0^tau values ds dtau, i.e. int_0^t (t-s) values(s) ds."""
    once = cumulative_trapezoid(values, t, initial=0.0)
    return cumulative_trapezoid(once, t, initial=0.0)


def compute_H_J(trace: FunctionalTrace) -> FunctionalTrace:
    t = trace.times
    trace.H = _twice_integrated((1.0 + t) * trace.G, t)
    trace.J = cumulative_trapezoid((1.0 + t) ** -3 * trace.H, t, initial=0.0)
    return trace


def kernel_quadrature(G, t, power: int = 2):
    """int_0^t_k (t_k - s)^power G(s) ds for every sample time, by direct trapezoid."""
    return np.array([trapezoid((t[k] - t[:k + 1]) ** power * G[:k + 1], t[:k + 1])
                     for k in range(len(t))])


def _relative_gaps(lhs, rhs, floor=0.0):
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    keep = scale > floor
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(lhs[keep] - rhs[keep]) / scale[keep]))


def check_trick_identity(trace: FunctionalTrace, t_min: float = 1.0) -> float:
    """Max relative gap between (1+t)^2 J(t) and 1/2 int_0^t (t-s)^2 G(s) ds for t >= t_min.

    Both sides vanish like t^3 at the origin, where the trapezoid error relative
    to them grows like (dt/t)^2; the gap is therefore sampled once the
    self-similar scale 1+t has doubled.  If the trace is shorter than t_min the
    last sample alone is used.
    """
    t = trace.times
    lhs = (1.0 + t) ** 2 * trace.J
    rhs = 0.5 * kernel_quadrature(trace.G, t)
    sel = t >= min(t_min, t[-1])
    if not np.any(np.abs(rhs[sel]) > 0):
        return 0.0 if np.all(lhs[sel] == 0) else math.inf
    return _relative_gaps(lhs[sel], rhs[sel])


def _legendre_integral(fun, a, b, n=400):
    x, w = roots_legendre(n)
    r = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * float(np.sum(w * fun(r)))


def compute_data_moments(mp: ModelParams, fam: TestFunctionFamily,
                         r_grid: np.ndarray | None = None, n_gauss: int = 400,
                         check_sign: bool = True) -> DataMoments:
    """E0 = int f psi(|x|^2), E1 = int g psi + int f (beta psi_{beta+2,mu-2} + (mu-1) psi).

    With ``r_grid`` the integrals use the solver's trapezoid rule (consistent
    with the functionals); otherwise Gauss-Legendre on [0, r0].
    """
    N, beta, mu = fam.N, fam.beta, fam.mu

    def integrands(r):
        f, g = data_profiles(mp, r)
        z = r * r
        ps = psi(fam, z)
        e0 = f * ps
        e1 = g * ps + f * (beta * psi(fam.raised(), z) + (mu - 1.0) * ps)
        return e0, e1

    if r_grid is not None:
        r = np.asarray(r_grid, dtype=float)
        r = r[r <= mp.r0]
        e0, e1 = integrands(r)
        E0, E1 = _radial_integral(e0, r, N), _radial_integral(e1, r, N)
    else:
        area = sphere_area(N)
        E0 = area * _legendre_integral(lambda r: integrands(r)[0] * r ** (N - 1), 0.0, mp.r0,
                                       n_gauss)
        E1 = area * _legendre_integral(lambda r: integrands(r)[1] * r ** (N - 1), 0.0, mp.r0,
                                       n_gauss)
    if check_sign and beta - 1.0 + mu > 0 and E1 <= 0:
        raise PositivityViolated(f"E1={E1} <= 0 although beta - 1 + mu > 0")
    return DataMoments(float(E0), float(E1), beta)


@dataclass
class BaseIdentity:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    gap_t0: float
    gap: float


def base_identity_sides(trace: FunctionalTrace, moments: DataMoments, snaps: Snapshots,
                        fam: TestFunctionFamily, eps: float, r0: float,
                        with_source: bool = True) -> BaseIdentity:
    """Both sides of

        eps E0 + eps E1 t + int_0^t (t-s) G ds
            = int u Phi dx + int_0^t (1+s)^(-beta) int u psi~(|x|^2/(1+s)^2) dx ds.

    ``with_source=False`` drops the G term, which is the form a linear run obeys.
    """
    N, beta = fam.N, fam.beta
    t = trace.times
    pairing = _per_snapshot(snaps, r0, lambda r, s, u: _radial_integral(u * Phi(fam, r, s), r, N))
    tilde = _per_snapshot(snaps, r0, lambda r, s, u: _radial_integral(
        u * psi_tilde(fam, (r / (1.0 + s)) ** 2), r, N))
    rhs = pairing + cumulative_trapezoid((1.0 + t) ** -beta * tilde, t, initial=0.0)
    lhs = eps * moments.E0 + eps * moments.E1 * t
    if with_source:
        lhs = lhs + _twice_integrated(trace.G, t)
    gap0 = abs(lhs[0] - rhs[0]) / abs(lhs[0]) if lhs[0] != 0 else abs(rhs[0])
    return BaseIdentity(t, lhs, rhs, float(gap0), _relative_gaps(lhs, rhs))


def check_base_identity(trace, moments, snaps, fam, eps, r0, with_source=True) -> float:
    return base_identity_sides(trace, moments, snaps, fam, eps, r0, with_source).gap


def lp_norms(snaps: Snapshots, p: float, N: int, r0: float) -> np.ndarray:
    return _per_snapshot(snaps, r0, lambda r, t, u: _radial_integral(np.abs(u) ** p, r, N)) ** (1 / p)


def holder_gaps(snaps: Snapshots, fam: TestFunctionFamily, p: float, r0: float) -> np.ndarray:
    """||u||_p ||Phi||_{p'} - int u Phi over the cone region, per snapshot (>= 0)."""
    N = fam.N
    q = p / (p - 1.0)

    def gap(r, t, u):
        ph = Phi(fam, r, t)
        lhs = _radial_integral(u * ph, r, N)
        norm_u = _radial_integral(np.abs(u) ** p, r, N) ** (1 / p)
        norm_phi = _radial_integral(np.abs(ph) ** q, r, N) ** (1 / q)
        return norm_u * norm_phi - lhs

    return _per_snapshot(snaps, r0, gap)


def _fitted_constant(lhs, rhs):
    ok = rhs > 0
    if not ok.any() or not np.any(lhs[ok] > 0):
        return None
    return float(np.max(lhs[ok] / rhs[ok]))


def check_base2_inequalities(run: RunResult, q: float, *, critical_delta: float = 0.0) -> dict:
    """Fit the minimal constants C1 that make both a-priori inequalities hold over a run.

    (i)  beta = (N+1-mu)/2 - 1/q,
         eps E0 + eps E1 t + int (t-s) G <= C1 [ ||u(t)||_p (1+t)^(N/p'+1-beta)
                                            + int ||u(s)||_p (1+s)^(N/p'+1-(N+1-mu)/2-1/p') ds ]
    (ii) beta0 = (N+1-mu)/2 - 1/p,
         int (t-s) G <= C1 [ ||u(t)||_p (1+t)^(N/p'+1-beta0)
                            + int ||u(s)||_p (1+s)^(N/p'-beta0) log(1+s)^(1/p') ds ]

    Constants are None when both sides vanish (zero data).
    """
    mp = run.mp
    N, mu, p = mp.pc.N, mp.pc.mu, mp.pc.p
    if not q > p:
        raise InvalidParams("need q > p")
    snaps = run.snapshots
    if snaps is None:
        raise InvalidParams("run has no snapshots")
    t = np.asarray(snaps.t, dtype=float)
    pp = p / (p - 1.0)
    edge = (N + 1.0 - mu) / 2.0
    norms = lp_norms(snaps, p, N, mp.r0)
    out = {"q": q}

    beta = edge - 1.0 / q
    if beta > max(0.0, 1.0 - mu):
        fam = TestFunctionFamily(beta, mu, N)
        tr = compute_G(snaps, fam, p, mp.r0)
        mom = compute_data_moments(mp, fam, snaps.r, check_sign=False)
        lhs = mp.eps * mom.E0 + mp.eps * mom.E1 * t + _twice_integrated(tr.G, t)
        rhs = (norms * (1 + t) ** (N / pp + 1 - beta)
               + cumulative_trapezoid(norms * (1 + t) ** (N / pp + 1 - edge - 1 / pp), t,
                                      initial=0.0))
        out["beta_i"] = beta
        out["C1_i"] = _fitted_constant(lhs, rhs)
        out["holder_min_gap"] = float(holder_gaps(snaps, fam, p, mp.r0).min())
    else:
        out["beta_i"] = beta
        out["C1_i"] = None

    beta0 = edge - 1.0 / p
    if beta0 > max(0.0, 1.0 - mu) and (N >= 2 or p > 2.0 / mu):
        fam0 = TestFunctionFamily(beta0, mu, N)
        G0 = compute_G(snaps, fam0, p, mp.r0).G
        lhs = _twice_integrated(G0, t)
        rhs = (norms * (1 + t) ** (N / pp + 1 - beta0)
               + cumulative_trapezoid(norms * (1 + t) ** (N / pp - beta0)
                                      * np.log1p(t) ** (1 / pp), t, initial=0.0))
        out["beta_ii"] = beta0
        out["C1_ii"] = _fitted_constant(lhs, rhs)
    else:
        out["beta_ii"] = beta0
        out["C1_ii"] = None
    return out


def default_beta(mp: ModelParams, delta: float = DEFAULT_DELTA) -> float:
    """beta = (N+1-mu)/2 - (sup S_N - delta): the subcritical choice of the proofs."""
    from .exponents import admissible_set_SN

    pc = mp.pc
    sup = admissible_set_SN(pc).sup_value
    return (pc.N + 1.0 - pc.mu) / 2.0 - (sup - delta)


# ---------------------------------------------------------------------------
# ODE blowup criteria


class OdeKind(enum.Enum):
    POWER = "PowerCaseI"  # C H^p <= H'' + c H'/sigma
    LOG = "LogCaseII"     # C sigma^(1-p) H^p <= H'' + 2 H'


@dataclass(frozen=True)
class BlowupOdeProblem:
    kind: OdeKind
    p: float
    C: float = 1.0
    c: float = 1.0
    sigma0: float = 1.0
    blow_level: float = 1e12
    sigma_cap: float = 1e40

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidParams("p must exceed 1")
        if not (self.C > 0 and self.c > 0 and self.sigma0 > 0):
            raise InvalidParams("C, c and sigma0 must be positive")


def lower_profile(prob: BlowupOdeProblem, eps: float, sigma):
    """The assumed lower bound: eps^p C sigma^2 (case i) or eps^p C sigma (case ii)."""
    k = 2 if prob.kind is OdeKind.POWER else 1
    return eps ** prob.p * prob.C * np.asarray(sigma, dtype=float) ** k


def _second_derivative(prob: BlowupOdeProblem, eps: float):
    """H'' from the equality form and its partials in (sigma, H').

    The equation is forced so that the lower profile solves the linear part
    exactly; the nonlinearity then only pushes H above it.
    Returns a function (sigma, H, H') -> (H'', dH''/dsigma, dH''/dH').
    """
    p, C, c = prob.p, prob.C, prob.c
    amp = eps ** p * C
    if prob.kind is OdeKind.POWER:
        force = amp * (2.0 + 2.0 * c)
        return lambda s, H, dH: (C * H ** p - c * dH / s + force, c * dH / s**2, -c / s)
    force = 2.0 * amp
    return lambda s, H, dH: (C * s ** (1.0 - p) * H ** p - 2.0 * dH + force,
                             C * (1.0 - p) * s ** -p * H ** p, -2.0)


def blowup_sigma(prob: BlowupOdeProblem, eps: float, rtol: float = 1e-8) -> float:
    """sigma at which H reaches blow_level, starting on the lower profile at sigma0.

    H is increasing, so the ODE is integrated with y = log H as the independent
    variable for (sigma, H'): the singularity then sits at a finite y and the
    approach to it stays resolved in floating point.
    """
    s0 = prob.sigma0
    H0 = float(lower_profile(prob, eps, s0))
    dH0 = eps ** prob.p * prob.C * (2 * s0 if prob.kind is OdeKind.POWER else 1.0)
    accel = _second_derivative(prob, eps)
    y_end = math.log(prob.blow_level)
    if math.log(H0) >= y_end:
        return s0

    def f(y, state):
        s, dH = state
        H = math.exp(y)
        return [H / dH, H * accel(s, H, dH)[0] / dH]

    def jac(y, state):
        s, dH = state
        H = math.exp(y)
        a, a_s, a_d = accel(s, H, dH)
        return [[0.0, -H / dH**2], [H * a_s / dH, H * (a_d * dH - a) / dH**2]]

    def escaped(y, state):
        return prob.sigma_cap - state[0]

    def stalled(y, state):
        return state[1]

    escaped.terminal = stalled.terminal = True
    sol = solve_ivp(f, (math.log(H0), y_end), [s0, dH0], method="Radau", jac=jac, rtol=rtol,
                    atol=[1e-12 * s0, 1e-300], events=[escaped, stalled])
    if sol.status != 0 or sol.t[-1] < y_end:
        raise NoBlowup(f"H stalled below {prob.blow_level:g} (sigma={sol.y[0, -1]:.3g}, "
                       f"{sol.message})")
    return float(sol.y[0, -1])


def default_eps_range(kind: OdeKind, p: float, n: int = 7, decades: float = 1.5):
    """Log-spaced eps whose predicted sigma* stays >= 1e4 sigma0, where the power law holds."""
    hi = min(0.1, 10.0 ** (-4.0 / abs(expected_ode_slope(kind, p))))
    return np.geomspace(hi * 10.0 ** -decades, hi, n)


@dataclass(frozen=True)
class OdeScaling:
    kind: OdeKind
    p: float
    eps: tuple
    sigma_star: tuple
    slope: float
    intercept: float
    residual: float
    expected_slope: float

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected_slope) / abs(self.expected_slope)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "p": self.p, "eps": list(self.eps),
                "sigma_star": list(self.sigma_star), "slope": self.slope,
                "intercept": self.intercept, "residual": self.residual,
                "expected_slope": self.expected_slope, "relative_error": self.relative_error}


def expected_ode_slope(kind: OdeKind, p: float) -> float:
    return -(p - 1.0) / 2.0 if kind is OdeKind.POWER else -p * (p - 1.0)


def blowup_ode_demo(prob: BlowupOdeProblem, eps_list) -> OdeScaling:
    """Blowup sigma*(eps) over eps_list and the least-squares slope of log sigma* vs log eps."""
    eps = np.sort(np.asarray(eps_list, dtype=float))
    if eps.size < 3 or math.log10(eps[-1] / eps[0]) < 1.5 - 1e-9:
        raise InsufficientData("eps_list must hold at least 3 values spanning 1.5 decades")
    sig = np.array([blowup_sigma(prob, e) for e in eps])
    x, y = np.log(eps), np.log(sig)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(math.sqrt(res[0] / eps.size)) if res.size else 0.0
    return OdeScaling(prob.kind, prob.p, tuple(eps.tolist()), tuple(sig.tolist()),
                      float(slope), float(intercept), resid, expected_ode_slope(prob.kind, prob.p))


def sigma_power(t, lam: float):
    """sigma = (2/lambda)(1+t)^(lambda/2), the variable of the subcritical argument."""
    return 2.0 / lam * (1.0 + np.asarray(t, dtype=float)) ** (lam / 2.0)


def time_from_sigma_power(sigma, lam: float):
    return (lam * np.asarray(sigma, dtype=float) / 2.0) ** (2.0 / lam) - 1.0


def sigma_log(t):
    """sigma = log(1+t), the variable of the critical argument."""
    return np.log1p(np.asarray(t, dtype=float))


def time_from_sigma_log(sigma):
    return np.expm1(np.asarray(sigma, dtype=float))
