"""Scalar derivative-free search helpers."""

from __future__ import annotations

from typing import Callable

from scipy.optimize import minimize_scalar


def bounded_minimize(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[a, b]`` with scipy's bounded Brent search.

    The bracket tolerance is ``tol * max(1, |a| + |b|)``.
    Returns ``(x, f(x), function evaluations)``.
    """
    a, b = min(a, b), max(a, b)
    if b - a <= tol * max(1.0, abs(a) + abs(b)):
        x = 0.5 * (a + b)
        return x, f(x), 1
    res = minimize_scalar(
        f, bounds=(a, b), method="bounded",
        options={"xatol": tol * max(1.0, abs(a) + abs(b)), "maxiter": max_iter},
    )
    return float(res.x), float(res.fun), int(res.nfev)


def bracket_around(xs, i: int) -> tuple[float, float]:
    """Neighbouring grid points of index ``i`` (clamped at the ends)."""
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    return float(min(lo, hi)), float(max(lo, hi))
