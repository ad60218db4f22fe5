import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matdyn.exceptions import InvalidParametersError, SingularStateError
from matdyn.model import (ControlSettings, ModelParameters, Regime, Variant, check_cooperative,
                          classify_regime, jacobian, regime_margin, rhs, sample_omega_k,
                          validate_params)
from oracle_values import EE_STAR, YP_STAR_0

ALL = list(Variant)
CTRL = ControlSettings(1000.0, 0.05)

pos = st.floats(1e-3, 3000.0, allow_nan=False)
states = st.tuples(st.floats(0, 1000), pos, pos, pos).map(np.array)


def test_table_values_are_valid(P1):
    assert validate_params(P1) is P1


def test_invalid_r_reports_range():
    with pytest.raises(InvalidParametersError, match="r out of range"):
        validate_params(ModelParameters(r=1.5))


def test_every_violation_is_listed():
    with pytest.raises(InvalidParametersError) as exc:
        validate_params(ModelParameters(b=-1.0, mu_I=0.0, r=0.0))
    assert len(exc.value.errors) == 3


def test_denominator_identity(P1):
    D = P1.denominator
    assert D == pytest.approx(P1.nu_Y * P1.mu_F + P1.mu_Y * (P1.delta + P1.mu_F), rel=1e-14)
    assert D == pytest.approx(0.008167, abs=5e-7)


@given(st.floats(1e-3, 2.0), st.floats(1e-3, 2.0), st.floats(1e-3, 2.0), st.floats(1e-3, 2.0))
def test_denominator_positive_for_any_rates(nu_Y, mu_Y, mu_F, delta):
    p = ModelParameters(nu_Y=nu_Y, mu_Y=mu_Y, mu_F=mu_F, delta=delta)
    assert p.denominator == pytest.approx(nu_Y * mu_F + mu_Y * (delta + mu_F), rel=1e-9)
    assert p.denominator > 0


def test_control_settings_reject_negative():
    with pytest.raises(ValueError):
        ControlSettings(-1.0, 0.0)
    with pytest.raises(ValueError):
        ControlSettings(0.0, float("nan"))


def test_rhs_zero_at_te(P1):
    for v in ALL:
        np.testing.assert_array_equal(rhs(v, P1, CTRL, np.zeros(4)), np.zeros(4))


def test_rhs_at_ee_star(P1):
    d = rhs(Variant.FULL_NO_CONTROL, P1, None, np.array(EE_STAR))
    assert np.abs(d).max() <= 1e-6 * max(EE_STAR)


def test_rhs_at_yp_star_boundary(P1):
    c = ControlSettings(YP_STAR_0, 0.0)
    s = np.array(EE_STAR)
    assert classify_regime(P1, c, s) is Regime.BOUNDARY
    d = rhs(Variant.FULL_CONTROL, P1, c, s)
    assert np.abs(d[:3]).max() <= 1e-6 * max(EE_STAR)
    # without trapping males are untouched by the lure
    assert abs(d[3]) <= 1e-6 * max(EE_STAR)
    d_trap = rhs(Variant.FULL_CONTROL, P1, ControlSettings(YP_STAR_0, 0.1), s)
    assert d_trap[3] < 0


@given(states, st.floats(0, 5000), st.floats(0, 0.3))
def test_division_safe_form_matches_textbook(P1, s, yp, alpha):
    c = ControlSettings(yp, alpha)
    I, Y, F, M = s
    total = Y + yp
    fert = P1.nu_Y * min(P1.gamma * M / total, 1.0) * Y
    expect_dF = fert - (P1.delta + P1.mu_F) * F
    assert rhs(Variant.FULL_CONTROL, P1, c, s)[2] == pytest.approx(expect_dF, rel=1e-12, abs=1e-9)


def test_division_safe_at_zero_females(P1):
    s = np.array([10.0, 0.0, 5.0, 0.0])
    assert np.all(np.isfinite(rhs(Variant.FULL_NO_CONTROL, P1, None, s)))
    assert rhs(Variant.FULL_NO_CONTROL, P1, None, s)[2] == -(P1.delta + P1.mu_F) * 5.0


@given(states)
def test_full_control_without_control_is_full_no_control(P1, s):
    a = rhs(Variant.FULL_CONTROL, P1, ControlSettings(0.0, 0.0), s)
    b = rhs(Variant.FULL_NO_CONTROL, P1, None, s)
    np.testing.assert_array_equal(a, b)


@given(states, st.floats(1.0, 5000), st.floats(0, 0.3))
def test_full_control_matches_branch_systems(P1, s, yp, alpha):
    c = ControlSettings(yp, alpha)
    full = rhs(Variant.FULL_CONTROL, P1, c, s)
    if P1.gamma * s[3] >= s[1] + yp:
        other = rhs(Variant.ABUNDANCE_CONTROL, P1, c, s)
    else:
        other = rhs(Variant.SCARCITY_CONTROL, P1, c, s)
    np.testing.assert_allclose(full, other, rtol=1e-12, atol=1e-9)


@given(st.floats(1.0, 2000), st.floats(1.0, 5000), st.floats(0, 0.3), st.floats(0, 1000), st.floats(0, 3000))
def test_continuity_across_switching_surface(P1, M, yp, alpha, I, F):
    c = ControlSettings(yp, alpha)
    Y = P1.gamma * M - yp
    if Y <= 0:
        return
    s = np.array([I, Y, F, M])
    a = rhs(Variant.ABUNDANCE_CONTROL, P1, c, s)
    b = rhs(Variant.SCARCITY_CONTROL, P1, c, s)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9 * max(1.0, np.abs(a).max()))


def _fd_jacobian(v, p, c, s, eps=1e-6):
    J = np.zeros((4, 4))
    for j in range(4):
        h = eps * max(1.0, abs(s[j]))
        up, dn = s.copy(), s.copy()
        up[j] += h
        dn[j] -= h
        J[:, j] = (rhs(v, p, c, up) - rhs(v, p, c, dn)) / (2 * h)
    return J


@pytest.mark.parametrize("variant", ALL)
@settings(max_examples=40, deadline=None)
@given(s=states)
def test_jacobian_matches_finite_differences(P1, variant, s):
    c = ControlSettings(1000.0, 0.07)
    if variant in (Variant.FULL_CONTROL, Variant.FULL_NO_CONTROL):
        yp = c.Y_P if variant is Variant.FULL_CONTROL else 0.0
        # stay clear of the kink where one-sided derivatives differ
        if abs(P1.gamma * s[3] - s[1] - yp) < 1e-3 * (1 + s[1] + yp):
            return
    J = jacobian(variant, P1, c, s)
    Jfd = _fd_jacobian(variant, P1, c, s)
    scale = max(1.0, np.abs(J).max())
    assert np.abs(J - Jfd).max() <= 1e-5 * scale


def test_scarcity_control_jacobian_at_te(P1):
    alpha = 0.05
    J = jacobian(Variant.SCARCITY_CONTROL, P1, ControlSettings(1000.0, alpha), np.zeros(4))
    diag = [-(P1.nu_I + P1.mu_I), -P1.mu_Y, -(P1.delta + P1.mu_F), -(P1.mu_M + alpha)]
    np.testing.assert_allclose(np.diag(J), diag, rtol=1e-14)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(J).real), np.sort(diag), rtol=1e-12)


def test_jacobian_entry_vanishes_at_carrying_capacity(P1):
    J = jacobian(Variant.ABUNDANCE_NO_CONTROL, P1, None, np.array([P1.K, 10.0, 10.0, 10.0]))
    assert J[0, 2] == 0.0


def test_reduced_jacobian_shape(P1):
    assert jacobian(Variant.SCARCITY_NO_CONTROL, P1, None, np.ones(4), reduced=True).shape == (3, 3)
    with pytest.raises(ValueError):
        jacobian(Variant.FULL_NO_CONTROL, P1, None, np.ones(4), reduced=True)


def test_singular_state_is_reported(P1):
    with pytest.raises(SingularStateError):
        jacobian(Variant.SCARCITY_CONTROL, P1, ControlSettings(0.0, 0.1), np.zeros(4))


def test_control_variant_requires_settings(P1):
    with pytest.raises(ValueError):
        rhs(Variant.FULL_CONTROL, P1, None, np.ones(4))


def test_regime_examples(P1):
    assert classify_regime(P1, None, np.array(EE_STAR)) is Regime.ABUNDANCE
    assert classify_regime(P1, ControlSettings(0.0, 0.1), np.zeros(4)) is Regime.BOUNDARY
    # with a lure, gamma*0 < 0 + Y_P puts TE strictly in the scarcity region
    assert classify_regime(P1, CTRL, np.zeros(4)) is Regime.SCARCITY
    assert classify_regime(P1, None, np.array([1.0, 100.0, 1.0, 1.0])) is Regime.SCARCITY
    assert regime_margin(P1, None, np.array(EE_STAR)) == pytest.approx(4 * EE_STAR[3] - EE_STAR[1])


def test_vectorised_rhs_matches_rowwise(P1):
    S = sample_omega_k(P1, 50, rng=0)
    batch = rhs(Variant.FULL_CONTROL, P1, CTRL, S)
    rows = np.array([rhs(Variant.FULL_CONTROL, P1, CTRL, s) for s in S])
    np.testing.assert_array_equal(batch, rows)


def test_cooperativity_examples(P1):
    S = sample_omega_k(P1, 1000, rng=1)
    c = ControlSettings(1000.0, 0.0)
    assert check_cooperative(Variant.AUXILIARY_MONOTONE, P1, c, S).cooperative
    rep = check_cooperative(Variant.SCARCITY_CONTROL, P1, c, S)
    assert not rep.cooperative
    i, j, val = rep.counterexample_entry
    assert (i, j) == (1, 3) and val < 0
    for v in ALL:
        assert check_cooperative(v, P1, CTRL, np.zeros((1, 4))).cooperative


def test_omega_k_samples_inside(P1):
    S = sample_omega_k(P1, 500, rng=2)
    assert S.shape == (500, 4) and np.all(S >= 0) and np.all(S[:, 0] <= P1.K)
