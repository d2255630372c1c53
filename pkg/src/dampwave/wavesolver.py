"""Explicit finite differences for the radial damped semilinear wave equation

    u_tt - u_rr - (N-1)/r u_r + mu/(1+t) u_t = |u|^p,   u(0) = eps f,  u_t(0) = eps g.

Space is discretised on r_i = i dr with the conservative (finite-volume)
radial Laplacian

    (L u)_i = [A_{i+1/2}(u_{i+1}-u_i) - A_{i-1/2}(u_i-u_{i-1})] / (V_i dr),

A_{i+1/2} = r_{i+1/2}^(N-1), V_i the exact cell volume / |S^{N-1}|.  At the axis
this reduces to 2N(u_1-u_0)/dr^2.  Time stepping is leapfrog with the damping
term centred (still explicit), homogeneous Dirichlet data at r_max.
"""

from __future__ import annotations

import enum
import math
import time as _time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import GridTooCoarse, InvalidParams, NonFinite
from .exponents import ProblemClass

CFL_DEFAULT = 0.9
CELLS_PER_R0 = 64
MIN_CELLS_PER_R0 = 32
DOMAIN_MARGIN = 0.5
BLOW_THRESHOLD = 1e6
STIFFNESS_GUARD = 0.1
SUPPORT_CUTOFF = 1e-12


class Profile(enum.Enum):
    BUMP4 = "Bump4"
    CUSTOM = "Custom"


class Status(enum.Enum):
    COMPLETED = "CompletedNoBlowup"
    BLOWUP = "BlowupDetected"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class ModelParams:
    pc: ProblemClass
    eps: float
    r0: float = 0.5
    amp_f: float = 1.0
    amp_g: float = 0.0
    profile: Profile = Profile.BUMP4
    table: tuple | None = None  # Custom profile: (r, f, g) sample arrays on [0, r0]
    source: bool = True  # False drops |u|^p (linear runs)

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidParams("eps must be positive")
        if not 0 < self.r0 < 1:
            raise InvalidParams("the data support radius r0 must lie in (0, 1)")
        if self.amp_f < 0 or self.amp_g < 0:
            raise InvalidParams("data amplitudes must be nonnegative")
        if self.amp_f + self.amp_g <= 0 and self.profile is Profile.BUMP4:
            raise InvalidParams("need f + g not identically zero")
        N, p = self.pc.N, self.pc.p
        if N >= 3 and not p < N / (N - 2):
            raise InvalidParams(f"local theory needs p < N/(N-2) = {N / (N - 2):g} for N={N}")
        if self.profile is Profile.CUSTOM and self.table is None:
            raise InvalidParams("Custom profile needs a table")


@dataclass(frozen=True)
class RadialGrid:
    dr: float
    n_points: int

    @property
    def r_max(self) -> float:
        return self.dr * (self.n_points - 1)

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.n_points)

    @classmethod
    def for_run(cls, mp: ModelParams, T_max: float, dr: float | None = None,
                margin: float = DOMAIN_MARGIN) -> "RadialGrid":
        dr = mp.r0 / CELLS_PER_R0 if dr is None else dr
        n = int(math.ceil((mp.r0 + T_max + margin) / dr)) + 1
        return cls(dr, n)

    def refined(self) -> "RadialGrid":
        return RadialGrid(self.dr / 2.0, 2 * self.n_points - 1)


@dataclass
class RadialField:
    t: float
    values: np.ndarray
    prev_values: np.ndarray
    dt_prev: float


@dataclass
class Snapshots:
    t: np.ndarray
    r: np.ndarray
    u: np.ndarray  # shape (len(t), len(r))


@dataclass
class RunResult:
    mp: ModelParams
    grid: RadialGrid
    status: Status
    T_est: float
    t_final: float
    peak_amplitude: float
    min_value: float
    steps: int
    dt: float
    guard_halvings: int
    snapshots: Snapshots | None = None


@dataclass
class BlowupReport:
    status: Status
    T_est: float
    T_refined: float
    peak_amplitude: float
    diagnostics: dict = field(default_factory=dict)
    runs: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"status": self.status.value, "T_est": self.T_est, "T_refined": self.T_refined,
                "peak_amplitude": self.peak_amplitude, "diagnostics": self.diagnostics}


def bump4(r, r0: float, amp: float):
    s = (np.asarray(r, dtype=float) / r0) ** 2
    return np.where(s < 1.0, amp * (1.0 - np.minimum(s, 1.0)) ** 4, 0.0)


def data_profiles(mp: ModelParams, r):
    """(f, g) sampled at r, without the eps factor."""
    r = np.asarray(r, dtype=float)
    if mp.profile is Profile.BUMP4:
        return bump4(r, mp.r0, mp.amp_f), bump4(r, mp.r0, mp.amp_g)
    tr, tf, tg = (np.asarray(a, dtype=float) for a in mp.table)
    inside = r < mp.r0
    f = np.where(inside, np.interp(r, tr, tf), 0.0)
    g = np.where(inside, np.interp(r, tr, tg), 0.0)
    return f, g


def make_initial_data(mp: ModelParams, grid: RadialGrid):
    if mp.r0 / grid.dr < MIN_CELLS_PER_R0 - 1e-9:
        raise GridTooCoarse(f"dr={grid.dr} resolves r0={mp.r0} with fewer than "
                            f"{MIN_CELLS_PER_R0} cells")
    return data_profiles(mp, grid.r)


class RadialOperator:
    """Conservative radial Laplacian and the matching energy weights."""

    def __init__(self, grid: RadialGrid, N: int):
        self.grid, self.N = grid, N
        dr = grid.dr
        r = grid.r
        faces = r[:-1] + dr / 2.0
        self.face_w = faces ** (N - 1)
        lo = np.concatenate([[0.0], faces])
        hi = np.concatenate([faces, [r[-1] + dr / 2.0]])
        self.vol = (hi**N - lo**N) / N  # cell volume without the |S^{N-1}| factor

    def apply(self, u: np.ndarray) -> np.ndarray:
        dr = self.grid.dr
        flux = self.face_w * np.diff(u) / dr
        out = np.empty_like(u)
        out[0] = flux[0]
        out[1:-1] = flux[1:] - flux[:-1]
        out[:-1] /= self.vol[:-1]
        out[-1] = 0.0  # Dirichlet node
        return out

    def energy(self, u_old: np.ndarray, u_new: np.ndarray, dt: float) -> float:
        """Leapfrog-conserved energy between two consecutive levels (mu = 0, no source)."""
        dr = self.grid.dr
        kinetic = 0.5 * np.sum(self.vol * ((u_new - u_old) / dt) ** 2)
        potential = 0.5 * np.sum(self.face_w * np.diff(u_new) * np.diff(u_old)) / dr
        return float(kinetic + potential)


@lru_cache(maxsize=None)
def stability_limit(N: int, n: int = 256) -> float:
    """Largest dt/dr for which leapfrog on the radial Laplacian stays stable.

    The axis row 2N(u_1-u_0)/dr^2 pushes the spectral radius above 4/dr^2 for
    N >= 2, so the usual dt <= dr is not enough there.  The bound depends only
    on N (the extreme mode sits at the axis), so a small grid suffices.
    """
    op = RadialOperator(RadialGrid(1.0, n + 1), N)
    w = np.sqrt(op.vol[:n])
    k = np.zeros((n, n))
    idx = np.arange(n - 1)
    k[idx, idx] += op.face_w[:n - 1]
    k[idx + 1, idx + 1] += op.face_w[:n - 1]
    k[idx, idx + 1] = k[idx + 1, idx] = -op.face_w[:n - 1]
    k[n - 1, n - 1] += op.face_w[n - 1]  # face to the Dirichlet node
    rho = np.linalg.eigvalsh(k / np.outer(w, w)).max()
    return min(1.0, 2.0 / math.sqrt(rho))


def time_step(grid: RadialGrid, N: int, cfl: float, T_max: float) -> float:
    """cfl * dr, shrunk to the stencil stability bound and to divide T_max evenly."""
    dt = cfl * grid.dr * stability_limit(N)
    if math.isfinite(T_max) and T_max > 0:
        dt = T_max / math.ceil(T_max / dt - 1e-9)
    return dt


def _source(u: np.ndarray, p: float, on: bool) -> np.ndarray:
    return np.abs(u) ** p if on else np.zeros_like(u)


def step(state: RadialField, mp: ModelParams, grid: RadialGrid, dt: float,
         op: RadialOperator | None = None, forcing=None) -> RadialField:
    """One (possibly variable-size) centred step from ``state`` to t + dt.

    With h1 the previous step and h2 = dt the update solves

        2/(h1+h2) [(u+ - u)/h2 - (u - u-)/h1] + m (u+ - u-)/(h1+h2) = L u + |u|^p,

    m = mu/(1+t), which is the usual leapfrog when h1 = h2.
    """
    op = op or RadialOperator(grid, mp.pc.N)
    u, up = state.values, state.prev_values
    h1, h2 = state.dt_prev, dt
    m = mp.pc.mu / (1.0 + state.t)
    rhs = op.apply(u) + _source(u, mp.pc.p, mp.source)
    if forcing is not None:
        rhs = rhs + forcing(state.t, grid.r)
    k = m * h2 / 2.0
    new = ((h1 + h2) * h2 / 2.0 * rhs + (1.0 + h2 / h1) * u - (h2 / h1) * up + k * up) / (1.0 + k)
    new[-1] = 0.0
    if not np.all(np.isfinite(new)):
        raise NonFinite(f"non-finite values at t={state.t + dt}")
    return RadialField(state.t + dt, new, u, dt)


def first_step(u0, v0, mp: ModelParams, grid: RadialGrid, dt: float,
               op: RadialOperator, forcing=None) -> RadialField:
    """Second-order Taylor start: u1 = u0 + dt v0 + dt^2/2 u_tt(0)."""
    acc = op.apply(u0) + _source(u0, mp.pc.p, mp.source) - mp.pc.mu * v0
    if forcing is not None:
        acc = acc + forcing(0.0, grid.r)
    u1 = u0 + dt * v0 + 0.5 * dt * dt * acc
    u1[-1] = 0.0
    return RadialField(dt, u1, u0, dt)


def simulate(mp: ModelParams, grid: RadialGrid, T_max: float, *,
             blow_threshold: float = BLOW_THRESHOLD, cfl: float = CFL_DEFAULT,
             snapshot_every: int = 0, initial=None, forcing=None,
             check_domain: bool = True) -> RunResult:
    """Integrate on one grid until T_max or until max|u| reaches blow_threshold.

    ``initial`` overrides the (eps f, eps g) data with explicit (u0, v0) arrays;
    ``forcing(t, r)`` adds a right-hand side (manufactured solutions).
    Snapshots are kept every ``snapshot_every`` steps (0 = none); the crossing
    state is never stored, so snapshots always hold pre-blowup fields.
    """
    if check_domain and T_max > grid.r_max - mp.r0 - 1e-12:
        raise GridTooCoarse(f"T_max={T_max} lets the light cone reach r_max={grid.r_max}")
    op = RadialOperator(grid, mp.pc.N)
    if initial is None:
        f, g = make_initial_data(mp, grid)
        u0, v0 = mp.eps * f, mp.eps * g
    else:
        u0, v0 = (np.array(a, dtype=float) for a in initial)
    dt0 = time_step(grid, mp.pc.N, cfl, T_max)
    p = mp.pc.p

    snaps_t, snaps_u = [], []

    def keep(t, u):
        snaps_t.append(t)
        snaps_u.append(u.copy())

    if snapshot_every:
        keep(0.0, u0)
    h = min(dt0, T_max)
    state = first_step(u0, v0, mp, grid, h, op, forcing)
    steps, halvings = 1, 0
    peak = float(np.max(np.abs(u0)))
    lowest = float(np.min(u0))
    status, T_est = Status.COMPLETED, math.inf

    def finish(st, t_est):
        snaps = None
        if snapshot_every:
            snaps = Snapshots(np.array(snaps_t), grid.r.copy(), np.array(snaps_u))
        return RunResult(mp, grid, st, t_est, state.t, peak, lowest, steps, dt0,
                         halvings, snaps)

    amp = float(np.max(np.abs(state.values)))
    if amp >= blow_threshold:
        return finish(Status.BLOWUP, _bisect_first(u0, v0, mp, grid, h, op, forcing,
                                                   blow_threshold))
    while state.t < T_max - 1e-12 * max(1.0, T_max):
        peak = max(peak, amp)
        lowest = min(lowest, float(np.min(state.values)))
        if snapshot_every and steps % snapshot_every == 0:
            keep(state.t, state.values)
        # source stiffness: |f'(u)|^(1/2) dt stays below the guard
        k = 0
        h = dt0
        stiff = math.sqrt(p * amp ** (p - 1)) if mp.source and amp > 0 else 0.0
        while h * stiff > STIFFNESS_GUARD:
            h /= 2.0
            k += 1
            if h < 1e-14:
                return finish(Status.DIVERGED, math.inf)
        halvings = max(halvings, k)
        h = min(h, T_max - state.t)
        try:
            nxt = step(state, mp, grid, h, op, forcing)
        except NonFinite:
            nxt = None
        new_amp = math.inf if nxt is None else float(np.max(np.abs(nxt.values)))
        if new_amp >= blow_threshold:
            s = _bisect_step(state, mp, grid, h, op, forcing, blow_threshold)
            return finish(Status.BLOWUP, state.t + s)
        state, amp = nxt, new_amp
        steps += 1
    peak = max(peak, amp)
    lowest = min(lowest, float(np.min(state.values)))
    if snapshot_every:
        keep(state.t, state.values)
    return finish(status, T_est)


def _crossing(fun, h, threshold, iters=60):
    lo, hi = 0.0, h
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        try:
            amp = fun(mid)
        except NonFinite:
            amp = math.inf
        if amp >= threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, h):
            break
    return 0.5 * (lo + hi)


def _bisect_step(state, mp, grid, h, op, forcing, threshold):
    return _crossing(lambda s: float(np.max(np.abs(step(state, mp, grid, s, op, forcing).values))),
                     h, threshold)


def _bisect_first(u0, v0, mp, grid, h, op, forcing, threshold):
    return _crossing(lambda s: float(np.max(np.abs(first_step(u0, v0, mp, grid, s, op,
                                                               forcing).values))),
                     h, threshold)


def integrate(mp: ModelParams, T_max: float, *, dr: float | None = None,
              blow_threshold: float = BLOW_THRESHOLD, cfl: float = CFL_DEFAULT,
              levels: int = 2, snapshot_every: int = 0) -> BlowupReport:
    """Lifespan proxy on ``levels`` grids dr, dr/2, ... with a bracketed refined time.

    T_est is the coarse-level crossing time.  T_refined is the Richardson value
    T_f + (T_f - T_c)/3 of the two finest levels clipped to their [T_c, T_f]
    bracket; the unclipped value is kept in diagnostics.
    """
    if levels < 1:
        raise InvalidParams("levels must be at least 1")
    grid = RadialGrid.for_run(mp, T_max, dr)
    t0 = _time.perf_counter()
    runs = []
    for k in range(levels):
        try:
            runs.append(simulate(mp, grid, T_max, blow_threshold=blow_threshold, cfl=cfl,
                                 snapshot_every=snapshot_every * 2**k))
        except NonFinite as exc:
            return BlowupReport(Status.DIVERGED, math.inf, math.inf, math.nan,
                                {"error": str(exc), "level": k,
                                 "wall_time": _time.perf_counter() - t0}, runs)
        grid = grid.refined()
    coarse = runs[0]
    diag = {"dr": coarse.grid.dr, "dt": coarse.dt, "n_points": coarse.grid.n_points,
            "steps": [r.steps for r in runs], "T_levels": [r.T_est for r in runs],
            "guard_halvings": max(r.guard_halvings for r in runs),
            "min_value": min(r.min_value for r in runs),
            "T_max": T_max, "blow_threshold": blow_threshold, "levels": levels}
    status = coarse.status
    T_refined = coarse.T_est
    if levels > 1:
        c, f = runs[-2], runs[-1]
        if c.status is Status.BLOWUP and f.status is Status.BLOWUP:
            rich = f.T_est + (f.T_est - c.T_est) / 3.0
            lo, hi = sorted((c.T_est, f.T_est))
            diag["T_richardson"] = rich
            T_refined = min(max(rich, lo), hi)
        elif c.status is not f.status:
            # one level crossed inside T_max, the other did not
            diag["levels_disagree"] = True
            status = Status.BLOWUP
            T_refined = min(c.T_est, f.T_est)
        else:
            T_refined = f.T_est
    T_est = coarse.T_est if coarse.status is Status.BLOWUP else T_refined
    if status is not Status.BLOWUP:
        T_est = T_refined = math.inf
    diag["wall_time"] = _time.perf_counter() - t0
    return BlowupReport(status, T_est, T_refined, max(r.peak_amplitude for r in runs), diag, runs)


def support_radius(u: np.ndarray, r: np.ndarray, cutoff: float = SUPPORT_CUTOFF) -> float:
    idx = np.nonzero(np.abs(u) > cutoff)[0]
    return float(r[idx[-1]]) if idx.size else 0.0


def check_finite_propagation(run: RunResult, cutoff: float = SUPPORT_CUTOFF) -> float:
    """Max over snapshots of support radius minus (r0 + t)."""
    s = run.snapshots
    if s is None:
        raise InvalidParams("run has no snapshots")
    return max(support_radius(u, s.r, cutoff) - (run.mp.r0 + t) for t, u in zip(s.t, s.u))


def energy_trace(run: RunResult) -> tuple[np.ndarray, np.ndarray]:
    """Staggered leapfrog energy between consecutive snapshots (snapshot_every=1)."""
    s = run.snapshots
    op = RadialOperator(run.grid, run.mp.pc.N)
    dts = np.diff(s.t)
    e = np.array([op.energy(s.u[i], s.u[i + 1], dts[i]) for i in range(len(dts))])
    return 0.5 * (s.t[1:] + s.t[:-1]), e
