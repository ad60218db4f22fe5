"""Small scalar numerics shared by the equilibrium and threshold solvers."""
from __future__ import annotations

import math

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, rel_tol: float = 1e-10, max_iter: int = 500):
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x_max, f(x_max))``.

    Stops once the bracket is narrower than ``rel_tol * max(|a|, |b|, tiny)``.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rel_tol * max(abs(a), abs(b), 1e-300):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    # the midpoint can lose to an interior probe by rounding; keep the best seen
    for xv, fv in ((c, fc), (d, fd)):
        if fv > fx:
            x, fx = xv, fv
    return x, fx
