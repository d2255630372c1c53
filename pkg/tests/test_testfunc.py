import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampwave.errors import DomainError, WrongRegime
from dampwave.testfunc import (CONTIGUOUS_TOL, TIME_DERIVATIVE_TOL, ConeDomain, Phi, Psi,
                               TestFunctionFamily, bound_regime, check_contiguous_identity,
                               check_dual_equation, check_time_derivative_identity,
                               cone_samples, dual_residual, estimate_bound_constants,
                               identity_report, monotonicity_gaps, psi, self_similar)

Z_GRID = np.round(np.arange(1, 20) * 0.05, 12)
FAMILIES = [(1.2, 0.8, 2), (0.9, 0.8, 2), (0.5, 0.5, 1), (1.5, 1.0, 2), (1.3, 0.4, 3)]


@pytest.mark.parametrize("beta,mu,N", FAMILIES)
def test_contiguous(beta, mu, N):
    assert check_contiguous_identity(TestFunctionFamily(beta, mu, N), Z_GRID) < CONTIGUOUS_TOL


@pytest.mark.parametrize("beta,mu,N", FAMILIES)
def test_time_derivative(beta, mu, N):
    fam = TestFunctionFamily(beta, mu, N)
    assert check_time_derivative_identity(fam, cone_samples(30, seed=1)) < TIME_DERIVATIVE_TOL


@pytest.mark.parametrize("beta,mu,N", FAMILIES[:4])
def test_dual_equation_second_order(beta, mu, N):
    d = check_dual_equation(TestFunctionFamily(beta, mu, N))
    assert d.residual < 1e-5
    assert 3.5 <= d.ratio <= 4.5


def test_dual_residual_includes_axis():
    fam = TestFunctionFamily(1.2, 0.8, 2)
    res = dual_residual(fam, np.array([0.0]), np.array([1.0]), 1e-3)
    assert abs(res[0]) < 1e-4


def test_dual_stencil_outside_cone():
    fam = TestFunctionFamily(1.2, 0.8, 2)
    with pytest.raises(DomainError):
        dual_residual(fam, np.array([1.99]), np.array([1.0]), 1e-2)


def test_psi_normalised_at_origin():
    assert psi(TestFunctionFamily(1.2, 0.8, 2), 0.0) == 1.0


def test_phi_is_shifted_psi():
    fam = TestFunctionFamily(1.2, 0.8, 2)
    assert Phi(fam, 0.3, 0.7) == pytest.approx(1.7 * Psi(fam, 0.3, 0.7), rel=1e-15)


def test_cone_domains():
    assert ConeDomain.Q1.contains(1.5, 1.0)
    assert not ConeDomain.Q0.contains(1.5, 1.0)
    fam = TestFunctionFamily(1.2, 0.8, 2)
    with pytest.raises(DomainError):
        Psi(fam, 2.0, 1.0)
    with pytest.raises(DomainError):
        self_similar(fam, 1.5, 1.0)
    assert self_similar(fam, 0.0, 2.0) == pytest.approx(2.0 ** -1.2)


def test_nonpositive_beta_rejected():
    with pytest.raises(WrongRegime):
        TestFunctionFamily(0.0, 0.8, 2)


def test_bound_regimes():
    assert bound_regime(TestFunctionFamily(1.0, 0.8, 2)) == "ii"
    assert bound_regime(TestFunctionFamily(1.8, 0.8, 2)) == "iii"
    with pytest.raises(WrongRegime):
        bound_regime(TestFunctionFamily(1.1, 0.8, 2))  # (N+1-mu)/2
    with pytest.raises(WrongRegime):
        bound_regime(TestFunctionFamily(0.1, 0.5, 2))


def test_bound_constants():
    b = estimate_bound_constants(TestFunctionFamily(1.0, 0.8, 2))
    assert b.c_lower >= 1.0 - 1e-12 and b.c_upper < 10
    s = estimate_bound_constants(TestFunctionFamily(1.8, 0.8, 2))
    # ratio psi (1-sqrt z)^(beta - critical) stays within a narrow positive band
    assert 0 < s.c_lower <= s.c_upper < 5 * s.c_lower


def test_identity_report_passes():
    rep = identity_report(TestFunctionFamily(1.2, 0.8, 2))
    assert rep["pass"], rep


@given(st.floats(0.3, 3.0), st.floats(0.0, 1.5), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_monotone_in_raised_family(beta, mu, N):
    # psi_{beta+2,mu-2} - psi_{beta,mu} = 2 z psi' / beta >= 0 whenever psi is increasing
    fam = TestFunctionFamily(beta, mu, N)
    gaps = monotonicity_gaps(fam, Z_GRID)
    if beta - 1 + mu >= 0:
        assert gaps.min() >= -1e-12
