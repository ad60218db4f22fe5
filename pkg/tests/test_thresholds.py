from dataclasses import replace

import numpy as np
import pytest

from matdyn.equilibria import cubic_structure, md_equilibria, tilde_equilibria
from matdyn.exceptions import NoThreshold
from matdyn.model import ControlSettings, ModelParameters
from matdyn.thresholds import (lure_ratio, tangency_newton, threshold_sweep, yp_double_star, yp_star,
                               yp_star_expanded)
from oracle_values import (TANGENCY_I_0, YP_DSTAR_0, YP_DSTAR_01, YP_DSTAR_TILDE_0, YP_DSTAR_TILDE_01,
                           YP_STAR_0, YP_STAR_01)


def test_yp_star_values(P1):
    assert yp_star(P1, 0.0) == pytest.approx(YP_STAR_0, rel=1e-12)
    assert yp_star(P1, 0.1) == pytest.approx(YP_STAR_01, rel=1e-12)
    assert round(yp_star(P1, 0.0)) == 5673 and round(yp_star(P1, 0.1)) == 588


@pytest.mark.parametrize("alpha", [0.0, 0.03, 0.1, 0.2])
def test_yp_star_forms_agree(P1, alpha):
    assert yp_star_expanded(P1, alpha) == pytest.approx(yp_star(P1, alpha), rel=1e-12)


def test_yp_star_linear_in_K(P1):
    assert yp_star(replace(P1, K=2 * P1.K), 0.05) == pytest.approx(2 * yp_star(P1, 0.05), rel=1e-12)


def test_yp_star_requires_assumptions():
    with pytest.raises(NoThreshold):
        yp_star(ModelParameters(b=0.05), 0.0)
    with pytest.raises(NoThreshold):
        yp_star(ModelParameters(r=0.999), 0.0)
    with pytest.raises(NoThreshold):
        yp_double_star(ModelParameters(r=0.999), 0.0)


def test_yp_double_star_values(P1):
    v0, i0 = yp_double_star(P1, 0.0)
    v1, _ = yp_double_star(P1, 0.1)
    assert v0 == pytest.approx(YP_DSTAR_0, rel=1e-9)
    assert v1 == pytest.approx(YP_DSTAR_01, rel=1e-9)
    assert i0 == pytest.approx(TANGENCY_I_0, rel=1e-6)
    assert v0 == pytest.approx(987735, rel=1e-3) and v1 == pytest.approx(102462, rel=1e-3)


def test_yp_double_star_tilde(P1):
    t0, _ = yp_double_star(P1, 0.0, "psi_tilde")
    t1, _ = yp_double_star(P1, 0.1, "psi_tilde")
    assert t0 == pytest.approx(YP_DSTAR_TILDE_0, rel=1e-9)
    assert t1 == pytest.approx(YP_DSTAR_TILDE_01, rel=1e-9)
    assert 1e4 <= t0 - YP_DSTAR_0 < 1e6


def test_bad_which(P1):
    with pytest.raises(ValueError):
        yp_double_star(P1, 0.0, "phi")


@pytest.mark.parametrize("tilde", [False, True])
def test_newton_agrees_with_ratio_maximum(P1, tilde):
    which = "psi_tilde" if tilde else "psi"
    v, i = yp_double_star(P1, 0.05, which)
    cs = cubic_structure(P1, ControlSettings(0.0, 0.05))
    i_n, v_n = tangency_newton(cs, i * 1.01, v * 0.99, tilde)
    assert v_n == pytest.approx(v, rel=1e-8)
    assert float(lure_ratio(cs, i, tilde)) == pytest.approx(v, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.1])
def test_bracketing_property(P1, alpha):
    v, _ = yp_double_star(P1, alpha)
    assert len(md_equilibria(P1, ControlSettings(v * (1 - 1e-4), alpha))) == 2
    assert len(md_equilibria(P1, ControlSettings(v * (1 + 1e-4), alpha))) == 0
    vt, _ = yp_double_star(P1, alpha, "psi_tilde")
    assert len(tilde_equilibria(P1, ControlSettings(vt * (1 - 1e-4), alpha))) == 2
    assert len(tilde_equilibria(P1, ControlSettings(vt * (1 + 1e-4), alpha))) == 0


def test_sweep(P1):
    alphas = np.linspace(0.0, 0.2, 21)
    reps = threshold_sweep(P1, alphas)
    assert all(r.ok for r in reps)
    ys = np.array([r.yp_star for r in reps])
    yd = np.array([r.yp_dstar for r in reps])
    yt = np.array([r.yp_dstar_tilde for r in reps])
    assert np.all(np.diff(ys) < 0) and np.all(np.diff(yd) < 0)
    assert np.all(ys < yd) and np.all(yd < yt)
    np.testing.assert_allclose(ys * (P1.mu_M + alphas), ys[0] * P1.mu_M, rtol=1e-12)
    r10 = reps[10]
    assert r10.alpha == pytest.approx(0.1)
    assert r10.yp_star / reps[0].yp_star == pytest.approx(0.1037, abs=1e-4)
    assert r10.yp_dstar / reps[0].yp_dstar == pytest.approx(0.1037, abs=1e-4)


def test_sweep_records_row_failures():
    reps = threshold_sweep(ModelParameters(r=0.999), [0.0, 0.1])
    assert len(reps) == 2 and not any(r.ok for r in reps)
    assert "NoThreshold" in reps[0].error


def test_sweep_rejects_bad_grid(P1):
    with pytest.raises(ValueError):
        threshold_sweep(P1, [0.0, -0.1])
    with pytest.raises(ValueError):
        threshold_sweep(P1, [float("inf")])
