"""Acceptance criteria, one test each, at the stated tolerances.

Each ``criterion_N`` returns ``(ok, detail)``. The tests record the verdict so
the pytest run ends with one PASS/FAIL line per criterion; running this file
directly prints the same lines without pytest.
"""
import numpy as np
import pytest

from matdyn.equilibria import endemic_equilibrium, equilibrium_catalog, md_equilibria
from matdyn.integrate import SolverOptions, integrate, integrate_batch, integrate_reference
from matdyn.model import (ControlSettings, ModelParameters, Variant, check_cooperative, regime_margin, rhs,
                          sample_omega_k)
from matdyn.offspring import basic_offspring_number, next_generation_offspring_number
from matdyn.phase import GridSpec, basin_grid, classify_many, comparison_census
from matdyn.repro import LONG_RUN
from matdyn.thresholds import threshold_sweep, yp_double_star, yp_star

P = ModelParameters()


def _interior_ics(seed, n, hi=2500.0):
    S = np.random.default_rng(seed).uniform(1.0, hi, (n, 4))
    S[:, 0] = np.minimum(S[:, 0], P.K)
    return S


def criterion_1():
    n0 = basic_offspring_number(P)
    ngm, _, _ = next_generation_offspring_number(P)
    rel = abs(ngm - n0) / n0
    # the published figure is the integer part of N0 = 122.566...
    ok = int(n0) == 122 and abs(n0 - 122.56) <= 0.05 and rel <= 1e-10
    return ok, f"N0 = {n0:.6f} (integer part {int(n0)}), NGM relative gap {rel:.1e}"


def criterion_2():
    ee = endemic_equilibrium(P)
    res = float(np.abs(rhs(Variant.FULL_NO_CONTROL, P, None, ee.as_array())).max())
    rounded = tuple(int(round(v)) for v in ee.as_array())
    ok = rounded == (992, 319, 1407, 1498) and res <= 1e-9 * P.K
    return ok, f"EE* ~ {rounded}, residual {res:.1e}"


def criterion_3():
    a, b = yp_star(P, 0.0), yp_star(P, 0.1)
    return abs(a - 5673) <= 1 and abs(b - 588) <= 1, f"Y_P*(0) = {a:.3f}, Y_P*(0.1) = {b:.3f}"


def criterion_4():
    a, _ = yp_double_star(P, 0.0)
    b, _ = yp_double_star(P, 0.1)
    ra, rb = abs(a / 987735 - 1), abs(b / 102462 - 1)
    return ra <= 1e-3 and rb <= 1e-3, f"Y_P**(0) = {a:.2f} (rel {ra:.1e}), Y_P**(0.1) = {b:.2f} (rel {rb:.1e})"


def criterion_5():
    r1 = yp_star(P, 0.1) / yp_star(P, 0.0)
    r2 = yp_double_star(P, 0.1)[0] / yp_double_star(P, 0.0)[0]
    ok = 0.095 <= r1 <= 0.115 and 0.095 <= r2 <= 0.115
    return ok, f"Y_P* ratio {r1:.4f}, Y_P** ratio {r2:.4f}"


def criterion_6():
    parts, ok = [], True
    for alpha in (0.0, 0.1):
        yd, _ = yp_double_star(P, alpha)
        below = len(md_equilibria(P, ControlSettings(0.9999 * yd, alpha)))
        above = len(md_equilibria(P, ControlSettings(1.0001 * yd, alpha)))
        ok &= below == 2 and above == 0
        parts.append(f"alpha={alpha:g}: {below} roots below, {above} above")
    return ok, "; ".join(parts)


def criterion_7():
    base = endemic_equilibrium(P).yf
    parts, ok = [], True
    for alpha in (0.0, 0.1):
        yd, _ = yp_double_star(P, alpha)
        cat = equilibrium_catalog(P, ControlSettings(0.9999 * yd, alpha))
        stable = [e for e in cat.stable() if e.label != "TE"]
        red = 1 - stable[0].yf / base if len(stable) == 1 else float("nan")
        ok &= abs(red - 0.49) <= 0.02
        parts.append(f"alpha={alpha:g}: {100 * red:.2f}% reduction")
    return bool(ok), "; ".join(parts)


def criterion_8():
    alphas = np.round(np.linspace(0.0, 0.1, 21), 10)
    reps = threshold_sweep(P, alphas)
    gap = np.array([r.yp_dstar_tilde - r.yp_dstar for r in reps])
    in_band = (gap >= 1e3) & (gap <= 1e5)
    ordered = all(r.yp_dstar_tilde > r.yp_dstar for r in reps)
    ok = bool(in_band.all() and ordered)
    bad = alphas[~in_band]
    detail = (f"gap from {gap[0]:.0f} (alpha=0) to {gap[-1]:.0f} (alpha=0.1); "
              f"thresholds {reps[-1].yp_dstar:.3g}..{reps[0].yp_dstar_tilde:.3g}; ordered={ordered}")
    if bad.size:
        detail += f"; outside [1e3, 1e5] at alpha = {', '.join(f'{a:g}' for a in bad)}"
    return ok, detail


def criterion_9():
    S0 = _interior_ics(9, 10)
    ee = endemic_equilibrium(P).as_array()
    res = integrate_batch(Variant.FULL_NO_CONTROL, P, None, S0, SolverOptions(t_end=2000.0))
    err = np.abs(res.y - ee).max(axis=1) / np.abs(ee).max()
    ok_ee = bool(np.all(res.t == 2000.0) and np.all(err <= 1e-3))
    yd, _ = yp_double_star(P, 0.0)
    c = ControlSettings(2.0 * yd, 0.0)
    te = classify_many(P, c, S0, SolverOptions(t_end=2000.0)).labels
    # right at the fold the passage is slow; allow a long horizon there
    c_edge = ControlSettings(1.0001 * yd, 0.0)
    te_edge = classify_many(P, c_edge, S0, LONG_RUN).labels
    ok = ok_ee and te.count("TE") == 10 and te_edge.count("TE") == 10
    return ok, (f"Y_P=0: max rel distance to EE* {err.max():.1e}; "
                f"Y_P=2*Y_P**: {te.count('TE')}/10 TE by t=2000; "
                f"Y_P=1.0001*Y_P**: {te_edge.count('TE')}/10 TE by t=2e5")


def criterion_10():
    rng = np.random.default_rng(10)
    S0 = rng.uniform(0.0, 2000.0, (20, 4))
    S0[:, 0] = np.minimum(S0[:, 0], P.K)
    settings_ = [(float(10 ** rng.uniform(2, 6.5)), float(rng.uniform(0, 0.2))) for _ in range(5)]
    worst, n_bad = -np.inf, 0
    for yp, alpha in settings_:
        reps = comparison_census(P, ControlSettings(yp, alpha), S0, t_end=1000.0, n_samples=201)
        n_bad += sum(not r.holds for r in reps)
        worst = max(worst, max(r.max_excess for r in reps))
    return n_bad == 0, f"{100 - n_bad}/100 runs bounded; largest full-minus-auxiliary {worst:.2e}"


def criterion_11():
    S = sample_omega_k(P, 1000, rng=11)
    c = ControlSettings(5500.0, 0.1)
    declared = (Variant.ABUNDANCE_NO_CONTROL, Variant.SCARCITY_NO_CONTROL, Variant.ABUNDANCE_CONTROL,
                Variant.AUXILIARY_MONOTONE)
    reps = {v: check_cooperative(v, P, c, S) for v in declared}
    scarce = S[regime_margin(P, c, S) < 0]
    full = check_cooperative(Variant.FULL_CONTROL, P, c, scarce)
    ok = all(r.cooperative for r in reps.values()) and not full.cooperative
    return ok, (f"cooperative on 1000 samples: {', '.join(v.value for v, r in reps.items() if r.cooperative)}; "
                f"full control counterexample entry {full.counterexample_entry}")


def criterion_12():
    S0 = _interior_ics(12, 10, hi=1500.0)
    t_end, h = 200.0, 0.05
    every = 200
    worst = 0.0
    c = ControlSettings(3000.0, 0.05)
    for s0 in S0:
        ref = integrate_reference(Variant.FULL_CONTROL, P, c, s0, h, t_end, record_every=every)
        tr = integrate(Variant.FULL_CONTROL, P, c, s0, SolverOptions(t_end=t_end), t_eval=ref.times)
        rel = np.abs(tr.states - ref.states).max(axis=1) / np.abs(ref.states).max(axis=1)
        worst = max(worst, float(rel.max()))
    s0 = S0[0]
    fine = integrate_reference(Variant.FULL_CONTROL, P, c, s0, 0.005, 20.0).final
    errs = [np.abs(integrate_reference(Variant.FULL_CONTROL, P, c, s0, hh, 20.0).final - fine).max()
            for hh in (0.125, 0.0625, 0.03125)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = worst <= 1e-4 and all(13.6 <= q <= 18.4 for q in ratios)
    return ok, f"max relative gap {worst:.1e}; error ratios under halving {', '.join(f'{q:.2f}' for q in ratios)}"


def criterion_13():
    spec = GridSpec()
    counts = {a: basin_grid(P, ControlSettings(5500.0, a), spec).count("TE") for a in (0.0, 0.1)}
    return counts[0.1] > counts[0.0], f"TE cells on 50x50: alpha=0 -> {counts[0.0]}, alpha=0.1 -> {counts[0.1]}"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 14)}


SLOW = {9, 10, 13}


@pytest.mark.parametrize("n", [pytest.param(n, marks=pytest.mark.slow) if n in SLOW else n for n in CRITERIA])
def test_criterion(n):
    import conftest

    ok, detail = CRITERIA[n]()
    conftest.ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


if __name__ == "__main__":
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
