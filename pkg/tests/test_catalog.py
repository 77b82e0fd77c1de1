import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from normaudit.audit import invariance_audit, normalization_check
from normaudit.catalog import MODEL_IDS, expected_manifest, get_model
from normaudit.catalog.binary import (
    BinaryChoiceModel,
    binary_choice_prob,
    binary_marginal_effect,
    binary_pct_welfare,
    coefficient_ratio,
)
from normaudit.catalog.logit import (
    LogitDemandModel,
    logit_cs_level,
    logit_delta_cs,
    logit_pct_cs,
    logit_shares,
    logsumexp,
)
from normaudit.catalog.network import (
    NetworkModel,
    example_model,
    fixed_effect_ranking,
    network_affine_family,
    network_link_prob,
    parametric_network_family,
    two_quantile_normalize,
)
from normaudit.catalog.temperature import temperature_pct_change, to_unit, unit_change
from normaudit.distributions import DistHandle, point_mass
from normaudit.errors import DegenerateQuantiles, DimMismatch, OffGrid, UnknownModel, ZeroDenominator
from normaudit.quotient import apply, sample_group


def naive_logsumexp(xs):
    return math.log(sum(math.exp(x) for x in xs))


# -- temperature ---------------------------------------------------------------


def test_temperature_pct_change_exact_oracle():
    # exact rational arithmetic as the oracle
    for unit, zero, deg in (("C", 0, 1), ("F", 32, Fraction(9, 5)), ("K", Fraction(27315, 100), 1)):
        lo, hi = deg * 1 + zero, deg * 11 + zero
        exact = float((hi - lo) / lo)
        assert temperature_pct_change(1.0, 11.0, unit) == pytest.approx(exact, abs=1e-12)


def test_temperature_unit_change_element():
    fam = get_model("temperature").family
    from normaudit.catalog.temperature import temperature_point

    moved = apply(fam, unit_change("C", "F"), temperature_point(1.0, 11.0, "C"))
    assert moved.coords["t_from"] == pytest.approx(33.8)
    assert moved.coords["t_to"] == pytest.approx(51.8)
    assert to_unit(-40.0, "F") == pytest.approx(-40.0)
    with pytest.raises(ZeroDenominator):
        temperature_pct_change(0.0, 1.0, "C")
    with pytest.raises(ValueError):
        to_unit(1.0, "R")


# -- binary ----------------------------------------------------------------------


def test_binary_functionals_against_oracles():
    m = BinaryChoiceModel((0.2, 0.3, -0.5))
    x = (1.0, 1.0, 0.5)
    idx = 0.2 + 0.3 - 0.25
    assert binary_choice_prob(m, x) == pytest.approx(stats.logistic.cdf(idx), rel=1e-14)
    # central finite difference in x2
    h = 1e-6
    fd = (binary_choice_prob(m, (1.0, 1.0 + h, 0.5)) - binary_choice_prob(m, (1.0, 1.0 - h, 0.5))) / (2 * h)
    assert binary_marginal_effect(m, x, 2) == pytest.approx(fd, rel=1e-8)
    assert coefficient_ratio(m, 2, 3) == pytest.approx(-0.6)
    assert binary_pct_welfare(m, x, (1.0, 2.0, 0.5)) == pytest.approx(0.3 / 0.25)
    with pytest.raises(DimMismatch):
        binary_marginal_effect(m, x, 1)
    with pytest.raises(DimMismatch):
        binary_choice_prob(m, (1.0, 2.0))
    with pytest.raises(ZeroDenominator):
        binary_pct_welfare(BinaryChoiceModel((0.0, 1.0)), (1.0, 0.0), (1.0, 1.0))


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(0.2, 5.0), x2=st.floats(-2, 2))
def test_binary_choice_prob_orbit_constant(a, b, x2):
    fam = get_model("binary").family
    theta = BinaryChoiceModel((0.4, -0.8, 0.1), DistHandle("normal")).to_point()
    moved = BinaryChoiceModel.from_point(apply(fam, fam.element(a, b), theta))
    ref = BinaryChoiceModel.from_point(theta)
    x = (1.0, x2, 0.3)
    assert binary_choice_prob(moved, x) == pytest.approx(binary_choice_prob(ref, x), abs=1e-12)


# -- logit -------------------------------------------------------------------------

FIXTURE = LogitDemandModel((0.0, 1.0, 2.0), 2.0, 1.0, 0.0, (0.0, 1.0, 3.0))


def test_logit_delta_cs_golden():
    oracle = 0.5 * (naive_logsumexp([0, 1, 3]) - naive_logsumexp([0, 1, 2]))
    assert logit_delta_cs(FIXTURE, FIXTURE.delta_prime) == pytest.approx(oracle, abs=1e-12)
    assert round(logit_delta_cs(FIXTURE, FIXTURE.delta_prime), 6) == 0.381120


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=8))
def test_logsumexp_matches_naive(xs):
    assert logsumexp(xs) == pytest.approx(naive_logsumexp(xs), abs=1e-12, rel=1e-12)


def test_logsumexp_survives_large_inputs():
    assert logsumexp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))


def test_logit_shares_and_errors():
    s = logit_shares(FIXTURE)
    assert s.sum() == pytest.approx(1.0)
    assert s[2] == pytest.approx(math.exp(2) / (1 + math.e + math.exp(2)))
    assert logit_pct_cs(FIXTURE, FIXTURE.delta_prime) == pytest.approx(
        logit_delta_cs(FIXTURE, FIXTURE.delta_prime) / logit_cs_level(FIXTURE)
    )
    with pytest.raises(DimMismatch):
        logit_delta_cs(FIXTURE, (0.0, 1.0))
    with pytest.raises(ValueError):
        LogitDemandModel((0.0, 1.0), alpha=0.0)


# -- network -------------------------------------------------------------------------


def test_network_link_prob_oracle():
    m = example_model()
    # individuals 1 and 2 sit at grid points 0 and 1
    idx = m.w(0, 1) + m.A[0] + m.A[1]
    assert network_link_prob(m, 1, 2) == pytest.approx(stats.logistic.cdf(idx), rel=1e-14)
    with pytest.raises(ValueError):
        network_link_prob(m, 1, 1)
    with pytest.raises(OffGrid):
        m.w(0, 7)


def test_fixed_effect_ranking_is_stable():
    m = NetworkModel({(0, 0): 0.0}, (0.5, -1.0, 0.5, 2.0))
    assert fixed_effect_ranking(m) == (2, 1, 3, 4)


@pytest.mark.parametrize("dist", [DistHandle("logistic"), DistHandle("normal", 1.0, 3.0),
                                  DistHandle("cauchy", -2.0, 0.3)])
def test_two_quantile_conditions(dist):
    m = example_model()
    m = NetworkModel(m.w_vals, m.A, dist, 0.25, m.x, 0, m.x_grid)
    n = two_quantile_normalize(m)
    assert n.errdist.ppf(0.25) == pytest.approx(0.0, abs=1e-10)
    assert n.errdist.ppf(0.75) == pytest.approx(1.0, abs=1e-10)
    assert n.w(0, 0) == pytest.approx(0.0, abs=1e-10)
    assert network_link_prob(n, 1, 3) == pytest.approx(network_link_prob(m, 1, 3), abs=1e-12)


def test_two_quantile_rejects_degenerate_law():
    m = example_model()
    m = NetworkModel(m.w_vals, m.A, point_mass(0.3), 0.25, m.x, 0, m.x_grid)
    with pytest.raises(DegenerateQuantiles):
        two_quantile_normalize(m)


def test_two_quantile_collapse_over_500_elements():
    fam = network_affine_family()
    entry = get_model("network")
    nm = entry.normalizations["two_quantile"]
    thetas = [t for t, _ in entry.base_points]
    rep = normalization_check(nm, fam, thetas, 500, 1e-10, 2, entry.orbit_invariant)
    assert rep.passed, rep


def test_parametric_family_keeps_w_location_fixed():
    fam = parametric_network_family()
    from normaudit.quotient import ParamPoint

    theta = ParamPoint({"A1": 0.2, "A2": -0.1, "beta1": 0.7}, {"U": DistHandle("logistic")})
    out = apply(fam, fam.element(1.0, 2.0), theta)
    assert out.coords["beta1"] == pytest.approx(1.4)
    assert out.dists["U"].location == pytest.approx(2.0)


# -- registry and verdict matrix -----------------------------------------------------


def test_unknown_model():
    with pytest.raises(UnknownModel):
        get_model("probit")


def test_manifest_covers_every_counterfactual():
    man = expected_manifest()
    for mid in MODEL_IDS:
        entry = get_model(mid)
        assert set(entry.counterfactuals) == {cf for m, cf in man if m == mid}
        assert len(entry.base_points) == 5


@pytest.mark.parametrize("pair", sorted(expected_manifest()))
def test_catalog_verdicts(pair):
    mid, cf = pair
    entry = get_model(mid)
    q = entry.counterfactuals[cf]
    for theta, ctx in entry.base_points:
        v = invariance_audit(q, entry.family, theta, ctx, 300, 1e-9, 7)
        assert v.status == entry.expected[cf], (theta, v)
        if v.invariant:
            assert v.max_rel_deviation <= 1e-12


@pytest.mark.parametrize("mid", MODEL_IDS)
def test_catalog_normalizations_are_sections(mid):
    entry = get_model(mid)
    thetas = [t for t, _ in entry.base_points]
    for nm in entry.normalizations.values():
        rep = normalization_check(nm, entry.family, thetas, 100, 1e-9, 0, entry.orbit_invariant)
        assert rep.passed, (nm.name, rep)


@pytest.mark.parametrize("mid", MODEL_IDS)
def test_orbit_invariants_are_constant_on_orbits(mid):
    entry = get_model(mid)
    for theta, _ in entry.base_points:
        ref = np.array(entry.orbit_invariant(theta))
        for g in sample_group(entry.family, 4, 50):
            moved = np.array(entry.orbit_invariant(apply(entry.family, g, theta)))
            np.testing.assert_allclose(moved, ref, rtol=1e-10, atol=1e-10)
