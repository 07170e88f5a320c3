import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from redblack.game import classify_state, enumerate_states, validate_config
from redblack.inequality import (
    ClosedForm,
    Family,
    check_equation,
    check_inequality,
    example_exp_pair,
    gmin,
    hypothesis_check,
    parse_form,
)
from redblack.models import Phi, make_constant, make_proportional_fixed_opp, make_scaled_exponential, make_threshold_surewin


def brute_violations(f, g, m, restricted=True):
    """Plain double loop, exact when f and g hold Fractions."""
    out = set()
    for a in range(m + 1):
        for x in range(m + 1):
            if restricted and a > x:
                continue
            if f[x] - f[a] < g[a] * f[x - a]:
                out.add((a, x))
    return out


def test_example_pair_restricted_holds():
    f_form, g_form = example_exp_pair()
    rep = check_inequality(f_form.table(1000), g_form.table(1000))
    assert rep.holds
    assert rep.m == 1000


def test_example_pair_unrestricted_has_violations():
    # with a > x the left side is negative while g vanishes from 100 on
    f_form, g_form = example_exp_pair()
    rep = check_inequality(f_form.table(1000), g_form.table(1000), restrict_a_le_x=False, f_ext=f_form)
    assert not rep.holds
    assert all(a > x for a, x, _, _ in rep.violations[:1000])
    assert rep.find(500, 0) is not None


def test_unrestricted_needs_extension():
    with pytest.raises(ValueError):
        check_inequality([0, 1], [0, 0], restrict_a_le_x=False)


def test_mismatched_lengths():
    with pytest.raises(ValueError):
        check_inequality([0, 1, 2], [0, 1])


def test_diagonal_never_violates():
    rng = np.random.default_rng(3)
    f = np.r_[0.0, rng.random(20)]
    g = rng.random(21)
    rep = check_inequality(f, g)
    assert all(a != x for a, x, _, _ in rep.violations)


def test_proportional_slice_violation_matches_exact_oracle():
    m = 7
    f_exact = [Fraction(t, t + 4) for t in range(m + 1)]
    g_exact = [Fraction(4, 7)] * (m + 1)
    expected = brute_violations(f_exact, g_exact, m)
    rep = check_inequality([float(v) for v in f_exact], [float(v) for v in g_exact])
    assert {(a, x) for a, x, _, _ in rep.violations} == expected
    lhs, rhs = rep.find(3, 4)
    assert lhs == pytest.approx(1 / 14, abs=1e-12)
    assert rhs == pytest.approx(4 / 35, abs=1e-12)


def test_violations_sorted_and_well_formed():
    rng = np.random.default_rng(0)
    f, g = rng.random(15), rng.random(15)
    rep = check_inequality(f, g)
    pairs = [(a, x) for a, x, _, _ in rep.violations]
    assert pairs == sorted(pairs)
    for a, x, lhs, rhs in rep.violations:
        assert 0 <= a <= x <= 14
        assert lhs < rhs - 1e-12


# gmin ---------------------------------------------------------------------


def brute_gmin(f):
    m = len(f) - 1
    return [min((f[x] - f[y]) / f[x - y] for x in range(y + 1, m + 1)) for y in range(m)]


def test_gmin_exponential_closed_form():
    eps, m = 0.01, 1000
    f = [-math.expm1(-eps * t) for t in range(m + 1)]
    tab = gmin(f)
    closed = np.exp(-eps * np.arange(m))
    assert tab.values.shape == (m,)
    np.testing.assert_allclose(tab.values, closed, rtol=0, atol=1e-12)


def test_gmin_matches_brute_force_loop():
    rng = np.random.default_rng(11)
    f = np.r_[0.0, np.sort(rng.uniform(0.05, 1.0, 30))]
    np.testing.assert_allclose(gmin(f).values, brute_gmin(list(f)), rtol=0, atol=1e-15)


def test_gmin_first_entry_is_one_when_f0_zero():
    f = [0.0, 0.2, 0.3, 0.9]
    assert gmin(f).values[0] == 1.0


def test_gmin_linear_is_one():
    f = np.arange(12, dtype=float) / 11
    np.testing.assert_allclose(gmin(f).values, 1.0, atol=1e-15)


def test_gmin_rejects_nonpositive():
    with pytest.raises(ValueError, match="positive"):
        gmin([0.0, 0.5, 0.0, 0.7])


nondecreasing_f = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=25).map(
    lambda xs: np.r_[0.0, np.sort(np.array(xs))]
)


@settings(max_examples=150, deadline=None)
@given(nondecreasing_f)
def test_gmin_pair_satisfies_inequality(f):
    tab = gmin(f)
    assert check_inequality(f, tab.as_g(), tol=1e-12).holds


@settings(max_examples=100, deadline=None)
@given(nondecreasing_f, st.floats(1e-6, 0.5))
def test_gmin_is_maximal(f, delta):
    tab = gmin(f)
    for y in range(len(tab.values)):
        g = tab.as_g()
        g[y] += delta
        rep = check_inequality(f, g)
        assert rep.find(y, int(tab.witness[y])) is not None


def test_gmin_pair_fails_on_diagonal_when_f0_positive():
    # a = x gives 0 >= g(a) f(0); a positive f(0) leaves no room for positive g
    f = np.linspace(0.1, 1.0, 10)
    rep = check_inequality(f, gmin(f).as_g())
    assert not rep.holds
    assert all(a == x for a, x, _, _ in rep.violations)


def test_gmin_maximal_at_tiny_bump():
    f = np.r_[0.0, np.linspace(0.1, 1.0, 10)]
    tab = gmin(f)
    for y in range(10):
        g = tab.as_g()
        g[y] += 1e-9
        assert not check_inequality(f, g).holds


@settings(max_examples=150, deadline=None)
@given(nondecreasing_f, st.data())
def test_lowering_g_keeps_inequality(f, data):
    g = np.clip(gmin(f).as_g(), 0.0, 1.0)
    assert check_inequality(f, g).holds
    scale = data.draw(arrays(float, g.shape, elements=st.floats(0.0, 1.0)))
    assert check_inequality(f, g * scale).holds


@settings(max_examples=100, deadline=None)
@given(
    arrays(float, 12, elements=st.floats(0.0, 1.0)),
    arrays(float, 12, elements=st.floats(0.0, 1.0)),
    arrays(float, 12, elements=st.floats(0.0, 1.0)),
)
def test_lowering_g_never_adds_violations(f, g, scale):
    before = {(a, x) for a, x, _, _ in check_inequality(f, g).violations}
    after = {(a, x) for a, x, _, _ in check_inequality(f, g * scale).violations}
    assert after <= before


# functional equation -------------------------------------------------------


def test_equation_linear_family():
    t = np.arange(11)
    res = check_equation(0.3 * t, np.ones(11))
    assert res.max_residual <= 1e-12
    assert res.family is Family.LINEAR_F_G_ONE


def test_equation_constant_family():
    res = check_equation(np.full(11, 0.7), np.zeros(11))
    assert res.max_residual == 0.0
    assert res.family is Family.G_ZERO_F_CONSTANT


def test_equation_zero_family():
    g = np.random.default_rng(5).random(11)
    res = check_equation(np.zeros(11), g)
    assert res.max_residual == 0.0
    assert res.family is Family.F_ZERO


def test_equation_example_pair_is_no_family():
    f_form, g_form = example_exp_pair()
    res = check_equation(f_form.table(1000), g_form.table(1000))
    assert res.max_residual > 0
    assert res.family is Family.NONE


def test_equation_geometric_candidate_fails():
    # f(y) = (c^y - 1)/(c - 1) with constant g = c is not a solution
    c = 0.8
    t = np.arange(10)
    res = check_equation((c**t - 1) / (c - 1), np.full(10, c))
    assert res.family is Family.NONE


@pytest.mark.parametrize(
    "f, g",
    [
        (0.3 * np.arange(9), np.ones(9)),
        (np.full(9, 0.7), np.zeros(9)),
        (np.zeros(9), np.linspace(0, 1, 9)),
    ],
)
def test_zero_residual_means_equality_in_inequality(f, g):
    assert check_equation(f, g).max_residual <= 1e-12
    assert check_inequality(f, g).holds
    a, x = np.triu_indices(9)
    np.testing.assert_allclose(f[x] - f[a], g[a] * f[x - a], atol=1e-12)


# whole-instance hypothesis ------------------------------------------------


def brute_hypothesis(model, cfg):
    verdict = True
    for s in enumerate_states(cfg):
        if classify_state(cfg, s).absorbing:
            continue
        for j in range(cfg.n_players):
            f, g = [], []
            for t in range(cfg.total + 1):
                bets = list(s)
                bets[j] = t
                p = model(tuple(bets), s)
                f.append(p[j])
                g.append(sum(p) - p[j])
            for a in range(cfg.total + 1):
                for x in range(a, cfg.total + 1):
                    if f[x] - f[a] < g[a] * f[x - a] - 1e-12:
                        verdict = False
    return verdict


CFG = validate_config(2, [3, 4], 5)


def test_hypothesis_exponential_holds():
    model = make_scaled_exponential(0.01, 2)
    rep = hypothesis_check(model, CFG)
    assert rep.holds == brute_hypothesis(model, CFG) is True
    assert len(rep.contexts) == 2 * sum(not classify_state(CFG, s).absorbing for s in enumerate_states(CFG))


def test_hypothesis_threshold_holds():
    model = make_threshold_surewin(0, 3)
    rep = hypothesis_check(model, CFG)
    assert rep.holds and brute_hypothesis(model, CFG)


def test_hypothesis_constant_fails_everywhere():
    rep = hypothesis_check(make_constant(0.5, 2), CFG)
    assert not rep.holds
    m = CFG.total
    for r in rep.contexts.values():
        pairs = {(a, x) for a, x, _, _ in r.violations}
        assert pairs == {(a, x) for a in range(1, m + 1) for x in range(a + 1, m + 1)}
        for _, _, lhs, rhs in r.violations:
            assert lhs == 0.0 and rhs == 0.25


def test_hypothesis_proportional_matches_brute_force():
    model = make_proportional_fixed_opp(Phi.linear(1))
    cfg = validate_config(2, [4, 3], 5)
    rep = hypothesis_check(model, cfg)
    assert rep.holds is brute_hypothesis(model, cfg) is False
    hits = {(s, j): (lhs, rhs) for s, j, lhs, rhs in rep.find(3, 4)}
    lhs, rhs = hits[((4, 3), 1)]
    assert lhs == pytest.approx(1 / 14, abs=1e-12)
    assert rhs == pytest.approx(4 / 35, abs=1e-12)


# closed forms ---------------------------------------------------------------


def test_parse_forms():
    assert parse_form("exp:0.01") == ClosedForm("exp", (0.01,))
    assert parse_form("truncated-linear:0.01:100") == ClosedForm("truncated-linear", (0.01, 100.0))
    assert parse_form({"form": "truncated-linear", "cutoff": 100, "epsilon": 0.01}) == parse_form(
        "truncated-linear:0.01:100"
    )
    assert parse_form("zero").table(3).tolist() == [0, 0, 0, 0]
    with pytest.raises(ValueError):
        parse_form("exp")
    with pytest.raises(ValueError):
        parse_form("cubic:1")


def test_truncated_linear_values():
    g = parse_form("truncated-linear:0.01:100").table(1000)
    assert g[0] == 1.0
    assert g[99] == pytest.approx(0.01)
    assert g[100] == 0.0 and g[1000] == 0.0
    f = parse_form("exp:0.01").table(1000)
    assert np.all(f + g <= 1.0)
