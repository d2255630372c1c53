import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampwave.errors import EmptySet, InvalidParams, OutsideTheorem
from dampwave.exponents import (INFINITY, Branch, ProblemClass, Tag, admissible_set_SN,
                                below_strauss, classify_regime, exponent_table,
                                fujita_exponent, gamma_poly, lifespan_bound, mu_star,
                                pipeline_lambda, sn_intersection, strauss_exponent,
                                theorem_exponent, theta_exponent)


def test_gamma_vanishes_at_four_two():
    assert gamma_poly(4, 2) == 0.0


def test_gamma_one_dimension_is_linear():
    assert gamma_poly(1, 3) == 2 + 2 * 3


def test_strauss_values():
    assert strauss_exponent(4) == pytest.approx(2.0, abs=1e-12)
    assert strauss_exponent(1) is INFINITY
    assert str(INFINITY) == "inf"
    with pytest.raises(InvalidParams):
        strauss_exponent(0.5)


def test_mu_star_and_fujita():
    assert mu_star(1) == pytest.approx(4 / 3, abs=1e-12)
    assert fujita_exponent(2) == 2.0


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 7])
def test_fujita_is_strauss_at_mu_star(N):
    assert strauss_exponent(N + mu_star(N)) == pytest.approx(fujita_exponent(N), abs=1e-12)


def test_problem_class_validation():
    for bad in [(0, 1, 2), (1.5, 1, 2), (1, -0.1, 2), (1, 1, 1.0)]:
        with pytest.raises(InvalidParams):
            ProblemClass(*bad)


def test_sup_examples():
    r = admissible_set_SN(ProblemClass(1, 1.0, 3.2))
    assert r.sup_value == pytest.approx(0.3125)
    assert r.branch is Branch.N1_INV_P
    r = admissible_set_SN(ProblemClass(1, 0.5, 3.5))
    assert r.sup_value == pytest.approx(0.25)
    assert r.branch is Branch.N1_HALF_MU


def test_sup_matches_brute_force_scan(oracles):
    res = oracles["sn_scan_resolution"]
    for N, mu, p, scan in oracles["sn_scan"]:
        r = admissible_set_SN(ProblemClass(N, mu, p))
        lo, hi = r.interval
        assert abs(lo - scan[0]) <= 2 * res
        assert abs(hi - scan[1]) <= 2 * res
        assert abs(r.sup_value - scan[1]) <= 2 * res, (N, mu, p)


def test_linear_row_reached():
    assert admissible_set_SN(ProblemClass(3, 0.0, 1.7)).branch is Branch.NGE2_LINEAR


def test_empty_set_raises():
    # p far above the Strauss exponent: the lower end of the third interval exceeds 1/p
    with pytest.raises(EmptySet):
        admissible_set_SN(ProblemClass(3, 0.0, 6.0))


def test_outside_range_returns_intersection():
    r = admissible_set_SN(ProblemClass(3, 2.0, 1.5))
    assert r.branch is Branch.OUTSIDE
    assert r.interval == sn_intersection(ProblemClass(3, 2.0, 1.5))


def test_theta_examples():
    assert theta_exponent(ProblemClass(1, 1.0, 3.0)) == pytest.approx(6.0)
    assert theta_exponent(ProblemClass(1, 0.5, 3.0)) == pytest.approx(8 / 3)


def test_lambda_definition():
    pc = ProblemClass(2, 0.8, 2.2)
    expected = gamma_poly(2.8, 2.2) / 4.4 - 1 / 2.2 + 0.3
    assert pipeline_lambda(pc, 0.3) == pytest.approx(expected)


def test_classification():
    assert classify_regime(ProblemClass(1, 1.0, 3.0)).tag is Tag.SUBCRITICAL
    p0 = strauss_exponent(2.8)
    assert classify_regime(ProblemClass(2, 0.8, p0)).tag is Tag.CRITICAL
    assert classify_regime(ProblemClass(2, 0.8, 1.5)).tag is Tag.OUTSIDE
    assert classify_regime(ProblemClass(2, 0.8, 3.0)).tag is Tag.OUTSIDE
    assert classify_regime(ProblemClass(1, 0.0, 3.0)).tag is Tag.OUTSIDE
    assert classify_regime(ProblemClass(1, 1.4, 3.0)).tag is Tag.OUTSIDE
    with pytest.raises(InvalidParams):
        classify_regime(ProblemClass(1, 1.0, 3.0), tol=0)


def test_fujita_endpoint_is_subcritical():
    assert classify_regime(ProblemClass(2, 0.8, 2.0)).tag is Tag.SUBCRITICAL


def test_lifespan_bound_examples():
    b = lifespan_bound(ProblemClass(1, 1.0, 3.0), 0.5)
    assert b.value == pytest.approx(64.0)
    assert b.exponent == pytest.approx(6.0)
    crit = lifespan_bound(ProblemClass(2, 0.8, strauss_exponent(2.8)), 0.5)
    assert crit.regime.tag is Tag.CRITICAL
    p = strauss_exponent(2.8)
    assert crit.exponent == pytest.approx(0.5 ** (-p * (p - 1)))
    huge = lifespan_bound(ProblemClass(2, 0.8, p), 1e-3)
    assert huge.value == math.inf
    with pytest.raises(OutsideTheorem):
        lifespan_bound(ProblemClass(2, 0.8, 3.0), 0.5)
    with pytest.raises(InvalidParams):
        lifespan_bound(ProblemClass(1, 1.0, 3.0), -1)


def test_theorem_rows():
    assert theorem_exponent(ProblemClass(3, 0.0, 1.7)) == 1.0
    assert theorem_exponent(ProblemClass(1, 0.5, 3.0)) == pytest.approx(8.0)
    pc = ProblemClass(2, 0.8, 2.2)
    assert theorem_exponent(pc) == pytest.approx(2 * 2.2 * 1.2 / gamma_poly(2.8, 2.2))


def test_exponent_table_keys():
    t = exponent_table(ProblemClass(1, 1.0, 3.0))
    assert set(t) == {"gamma", "p_fujita", "p_strauss", "mu_star", "S_interval", "sup_S",
                      "theta", "regime", "branch"}
    assert t["p_strauss"] != "inf"
    assert exponent_table(ProblemClass(1, 0.0, 3.0))["p_strauss"] == "inf"


@given(st.floats(1.0, 50.0))
def test_strauss_root_property(n):
    p0 = strauss_exponent(n)
    if p0 is INFINITY:
        return
    assert abs(gamma_poly(n, p0)) < 1e-9 * (1 + n * p0 * p0)
    assert not below_strauss(p0 * (1 + 1e-9), n)


@given(st.integers(1, 6), st.floats(0.0, 1.9), st.floats(1.01, 6.0))
@settings(max_examples=200)
def test_sup_is_upper_end_of_intersection(N, mu, p):
    pc = ProblemClass(N, mu, p)
    iv = sn_intersection(pc)
    try:
        r = admissible_set_SN(pc)
    except EmptySet:
        assert iv is None or classify_regime(pc).tag is not Tag.OUTSIDE
        return
    assert r.interval[0] < r.interval[1]
    if r.branch is not Branch.OUTSIDE:
        assert r.sup_value == pytest.approx(iv[1], rel=1e-12, abs=1e-12)


@given(st.integers(2, 5), st.floats(0.0, 1.0))
def test_theta_positive_in_subcritical_range(N, frac):
    mu = 0.5
    pf, p0 = fujita_exponent(N), strauss_exponent(N + mu)
    p = pf + frac * (p0 - pf) * 0.999
    pc = ProblemClass(N, mu, p)
    if classify_regime(pc).tag is Tag.SUBCRITICAL:
        assert 0 < theta_exponent(pc) < math.inf
