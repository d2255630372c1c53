"""Shared numerical fixtures that are plain functions rather than pytest fixtures."""

import math

import numpy as np

from dampwave.exponents import ProblemClass
from dampwave.wavesolver import ModelParams, RadialGrid, simulate

MMS_RADIUS = 1.0  # the second derivative jumps at R, so R sits on the Dirichlet node


def mms_profile(r, N, R=MMS_RADIUS):
    """(1 - (r/R)^2)^2 inside R and its radial Laplacian."""
    s = (np.asarray(r) / R) ** 2
    inside = s < 1
    phi = np.where(inside, (1 - s) ** 2, 0.0)
    lap = np.where(inside, -4 * N * (1 - s) / R**2 + 8 * s / R**2, 0.0)
    return phi, lap


def mms_error(N, dr, mu=0.5, p=2.0, T=1.0):
    """L-infinity error at T of the exact solution e^(-t) phi(r) driven by a matching forcing."""
    mp = ModelParams(ProblemClass(N, mu, p), 1.0)
    grid = RadialGrid(dr, int(round(1.0 / dr)) + 1)
    phi, lap = mms_profile(grid.r, N)

    def forcing(t, r):
        u = math.exp(-t) * phi
        return u - math.exp(-t) * lap - mu / (1 + t) * u - np.abs(u) ** p

    run = simulate(mp, grid, T, initial=(phi, -phi), forcing=forcing, check_domain=False,
                   snapshot_every=10**9)
    exact = math.exp(-run.t_final) * phi
    return float(np.max(np.abs(run.snapshots.u[-1] - exact)))


def mms_ratio(N):
    return mms_error(N, 1 / 40) / mms_error(N, 1 / 80)


def energy_drift_per_time(N=2, T=3.0):
    """Relative spread of the staggered energy for mu = 0 and no source, per unit time."""
    from dampwave.wavesolver import energy_trace

    mp = ModelParams(ProblemClass(N, 0.0, 2.0), 1.0, amp_f=1.0, amp_g=1.0, source=False)
    run = simulate(mp, RadialGrid.for_run(mp, T), T, snapshot_every=1)
    _, e = energy_trace(run)
    return float((e.max() - e.min()) / e[0] / T)
