import itertools

import numpy as np
import pytest

from redblack.game import action_set, classify_state, enumerate_states, validate_config
from redblack.models import (
    ConstantModel,
    ModelError,
    Phi,
    make_constant,
    make_proportional_fixed_opp,
    make_scaled_exponential,
    make_threshold_surewin,
    model_from_dict,
    slice_fg,
    validate_model,
)

CFG = validate_config(2, [3, 4], 5)


def test_proportional_linear():
    model = make_proportional_fixed_opp(Phi.linear(1), [3, 4])
    p = model((3, 4), (3, 4))
    assert p[0] == pytest.approx(3 / 7)
    assert p[1] == pytest.approx(4 / 7)
    assert sum(p) == pytest.approx(1.0, abs=1e-15)
    assert model((0, 4), (3, 4))[0] == 0.0


def test_proportional_uses_context_when_no_fortunes():
    model = make_proportional_fixed_opp(Phi.linear(1), [3, 4])
    assert model((3, 4)) == model((3, 4), (3, 4))
    with pytest.raises(ModelError):
        make_proportional_fixed_opp(Phi.linear(1))((1, 1))


def test_proportional_power():
    model = make_proportional_fixed_opp(Phi.power(2), [3, 4])
    assert model((3, 4), (3, 4))[0] == pytest.approx(9 / 49)


def test_proportional_bet_denominator():
    model = make_proportional_fixed_opp(Phi.linear(1), denominator="bets")
    assert model((1, 3), (4, 3)) == pytest.approx((1 / 4, 3 / 4))
    assert model((0, 0), (4, 3)) == (0.0, 0.0)


def test_proportional_zero_denominator_guard():
    model = make_proportional_fixed_opp(Phi.linear(1))
    assert model((0, 0), (0, 0)) == (0.0, 0.0)


def test_phi_table_matches_closed_form():
    phi = Phi.from_function(lambda q: q * q, 12)
    direct = make_proportional_fixed_opp(Phi.power(2))
    tabled = make_proportional_fixed_opp(phi)
    for bets in itertools.product(range(5), repeat=2):
        assert tabled(bets, (3, 4)) == pytest.approx(direct(bets, (3, 4)), abs=1e-15)
    with pytest.raises(ModelError):
        phi(1, 13)


def test_phi_rejects_bad_params():
    with pytest.raises(ModelError):
        Phi.linear(1.5)
    with pytest.raises(ModelError):
        Phi.power(0.5)
    with pytest.raises(ModelError):
        Phi("cubic")


def test_constant():
    model = make_constant(0.5, 2)
    assert sum(model((1, 3), None)) == 1.0
    assert model((0, 3), None)[0] == 0.0
    house = make_constant(0.25, 2)
    assert 1 - sum(house((2, 3), None)) == 0.5
    with pytest.raises(ModelError):
        make_constant(0.6, 2)


def test_threshold():
    model = make_threshold_surewin(0, 3)
    assert model((3, 4), None) == (1.0, 0.0)
    assert model((2, 4), None) == (0.0, 0.0)
    assert model((0, 4), None) == (0.0, 0.0)
    with pytest.raises(ModelError):
        make_threshold_surewin(0, 0)


def test_exponential():
    model = make_scaled_exponential(0.01, 2)
    # 1 - e^{-1} = 0.6321205588285577
    assert model((100, 0), None)[0] == pytest.approx(0.6321205588285577 / 2, abs=1e-15)
    assert model((0, 5), None)[0] == 0.0
    assert sum(model((1000, 1000), None)) < 1.0


def test_validate_model_examples():
    assert validate_model(make_constant(0.5, 2), CFG).ok
    rep = validate_model(ConstantModel(0.6, 2), CFG)
    assert not rep.ok
    sums = {v.bets: v.value for v in rep.violations if v.condition == "sum"}
    assert sums[(1, 1)] == pytest.approx(1.2)
    assert validate_model(make_proportional_fixed_opp(Phi.linear(1), [3, 4]), CFG).ok


def test_validate_model_flags_zero_bet_violation():
    class Leaky(ConstantModel):
        def __call__(self, bets, fortunes=None):
            return (0.1, 0.1)

    rep = validate_model(Leaky(0.1, 2), CFG)
    assert any(v.condition == "zero-bet" and v.bets[v.player] == 0 for v in rep.violations)


ALL_MODELS = [
    make_proportional_fixed_opp(Phi.linear(1), [3, 4]),
    make_proportional_fixed_opp(Phi.linear(0.6), [3, 4]),
    make_proportional_fixed_opp(Phi.power(2), [3, 4]),
    make_constant(0.5, 2),
    make_constant(0.25, 2),
    make_threshold_surewin(0, 3),
    make_scaled_exponential(0.01, 2),
]


@pytest.mark.parametrize("model", ALL_MODELS, ids=str)
def test_builtins_respect_constraints_on_every_legal_context(model):
    rep = validate_model(model, CFG, all_states=True)
    assert rep.ok, rep.violations[:3]
    for s in enumerate_states(CFG):
        if classify_state(CFG, s).absorbing:
            continue
        for bets in itertools.product(*(action_set(CFG, s, j) for j in range(2))):
            assert all(0.0 <= p <= 1.0 for p in model(bets, s))


def test_constant_sum_at_bold_bets():
    cfg = validate_config(3, [2, 3, 4], 6)
    model = make_proportional_fixed_opp(Phi.linear(1))
    for s in enumerate_states(cfg):
        if classify_state(cfg, s).absorbing:
            continue
        assert sum(model(s, s)) == pytest.approx(1.0, abs=1e-12)


def test_power_one_equals_linear_one():
    lin = make_proportional_fixed_opp(Phi.linear(1))
    pw = make_proportional_fixed_opp(Phi.power(1))
    for bets in itertools.product(range(8), repeat=2):
        for ctx in [(3, 4), (4, 3), (0, 7), (2, 2)]:
            assert lin(bets, ctx) == pw(bets, ctx)


def test_slice_proportional():
    model = make_proportional_fixed_opp(Phi.linear(1))
    sl = slice_fg(model, CFG, (3, 4), 0)
    t = np.arange(8)
    np.testing.assert_allclose(sl.f, t / (t + 4), atol=1e-15)
    np.testing.assert_allclose(sl.g, np.full(8, 4 / 7), atol=1e-15)


def test_slice_constant():
    sl = slice_fg(make_constant(0.5, 2), CFG, (3, 4), 0)
    assert sl.f[0] == 0.0
    assert np.all(sl.f[1:] == 0.5)
    assert np.all(sl.g == 0.5)


@pytest.mark.parametrize("model", ALL_MODELS, ids=str)
def test_slice_agrees_with_model(model):
    cfg = validate_config(2, [3, 4], 5)
    for s in enumerate_states(cfg):
        if classify_state(cfg, s).absorbing:
            continue
        for j in range(2):
            sl = slice_fg(model, cfg, s, j)
            assert sl.f[0] == 0.0
            for t in range(cfg.total + 1):
                bets = list(s)
                bets[j] = t
                p = model(tuple(bets), s)
                assert sl.f[t] == p[j]
                assert sl.g[t] == pytest.approx(sum(p) - p[j], abs=1e-15)


@pytest.mark.parametrize("model", ALL_MODELS, ids=str)
def test_descriptor_roundtrip(model):
    assert model_from_dict(model.to_dict()) == model


def test_descriptor_errors():
    with pytest.raises(ModelError):
        model_from_dict({"family": "nope"})
    with pytest.raises(ModelError):
        model_from_dict({"family": "constant"})
