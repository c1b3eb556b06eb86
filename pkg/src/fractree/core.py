"""Polynomials and rational functions in the half-order variable ``w = s**0.5``.

Coefficients are stored in ascending powers of ``w`` (``coeffs[i]`` multiplies
``w**i``), matching :mod:`numpy.polynomial.polynomial`.  All objects are
immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NoConvergence, NonFinite, PoleProximity, ValidationError, ZeroDenominator

__all__ = [
    "HalfOrderPolynomial",
    "HalfOrderRational",
    "poly_mul",
    "evaluate",
    "roots",
    "normalize",
    "half_order_variable",
    "conjugate_pairing_error",
    "symmetrize",
]

# below this |den(w)| evaluation is refused
POLE_GUARD = 1e-300
# coefficient magnitude above which root finding rescales w
SCALE_GUARD = 1e12
_EPS = np.finfo(float).eps


def _as_coeff_tuple(coeffs: Iterable[float]) -> tuple[float, ...]:
    arr = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise ValidationError("polynomial coefficients must be real")
        arr = arr.real
    arr = np.atleast_1d(arr.astype(float))
    if not np.all(np.isfinite(arr)):
        raise NonFinite("polynomial coefficients must be finite")
    nz = np.flatnonzero(arr)
    if nz.size == 0:
        return (0.0,)
    return tuple(float(x) for x in arr[: nz[-1] + 1])


@dataclass(frozen=True)
class HalfOrderPolynomial:
    """Real polynomial in ``w``; trailing zero coefficients are stripped."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        object.__setattr__(self, "coeffs", _as_coeff_tuple(coeffs))

    @classmethod
    def one(cls) -> "HalfOrderPolynomial":
        return cls((1.0,))

    @classmethod
    def from_roots(cls, rts: Sequence[complex]) -> "HalfOrderPolynomial":
        """Monic polynomial with the given roots; the set must be conjugate-closed."""
        c = P.polyfromroots(np.asarray(rts, dtype=complex)) if len(rts) else np.ones(1)
        c = np.asarray(c)
        if np.iscomplexobj(c):
            scale = max(1.0, float(np.max(np.abs(c))))
            if np.max(np.abs(c.imag)) > 1e-9 * scale:
                raise ValidationError("roots are not closed under conjugation")
            c = c.real
        return cls(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, w):
        return P.polyval(w, self.array)

    def __mul__(self, other):
        if isinstance(other, HalfOrderPolynomial):
            return poly_mul(self, other)
        return HalfOrderPolynomial(self.array * float(other))

    __rmul__ = __mul__

    def __add__(self, other: "HalfOrderPolynomial") -> "HalfOrderPolynomial":
        return HalfOrderPolynomial(P.polyadd(self.array, other.array))

    def shift(self, k: int = 1) -> "HalfOrderPolynomial":
        """Multiply by ``w**k``."""
        if self.is_zero():
            return self
        return HalfOrderPolynomial(np.concatenate([np.zeros(k), self.array]))

    def roots(self, scale: float | None = None) -> np.ndarray:
        return roots(self, scale=scale)


def poly_mul(a: HalfOrderPolynomial, b: HalfOrderPolynomial) -> HalfOrderPolynomial:
    return HalfOrderPolynomial(np.convolve(a.array, b.array))


@dataclass(frozen=True)
class HalfOrderRational:
    num: HalfOrderPolynomial
    den: HalfOrderPolynomial

    def __post_init__(self):
        if not isinstance(self.num, HalfOrderPolynomial):
            object.__setattr__(self, "num", HalfOrderPolynomial(self.num))
        if not isinstance(self.den, HalfOrderPolynomial):
            object.__setattr__(self, "den", HalfOrderPolynomial(self.den))
        if self.den.is_zero():
            raise ZeroDenominator("denominator is the zero polynomial")

    @classmethod
    def one(cls) -> "HalfOrderRational":
        return cls(HalfOrderPolynomial.one(), HalfOrderPolynomial.one())

    @property
    def degree(self) -> tuple[int, int]:
        return self.num.degree, self.den.degree

    def dc_ratio(self) -> float:
        """``num(0) / den(0)``, the gain at ``w = 0``."""
        return self.num.coeffs[0] / self.den.coeffs[0]

    def __call__(self, s):
        return evaluate(self, s)

    def evaluate_w(self, w):
        """Evaluate directly at points of the ``w`` plane."""
        w = np.asarray(w, dtype=complex)
        d = self.den(w)
        if np.any(np.abs(d) < POLE_GUARD):
            raise PoleProximity("evaluation point coincides with a pole")
        out = self.num(w) / d
        return complex(out) if out.ndim == 0 else out


def half_order_variable(s):
    """Principal square root of ``s``.

    For purely imaginary ``s = j*omega`` the result is built as
    ``sqrt(|omega|/2) * (1 +/- j)`` so that ``arg(w)`` is exactly ``+/- pi/4``.
    """
    s = np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(s)):
        raise NonFinite("evaluation point must be finite")
    w = np.sqrt(s)
    axis = (s.real == 0) & (s.imag != 0)
    if np.any(axis):
        r = np.sqrt(np.abs(s.imag[axis]) / 2)
        w = np.where(axis, 0j, w)
        w[axis] = r + 1j * np.sign(s.imag[axis]) * r
    return w


def evaluate(r: HalfOrderRational, s):
    """Evaluate ``r`` at ``s`` using ``w = sqrt(s)`` (principal branch).

    Accepts a scalar or an array; a scalar input gives a Python ``complex``.
    """
    return r.evaluate_w(half_order_variable(s))


def normalize(r: HalfOrderRational) -> HalfOrderRational:
    """Make the denominator monic, folding its leading coefficient into the numerator."""
    if r.den.is_zero():
        raise ZeroDenominator("denominator is the zero polynomial")
    lead = r.den.leading
    return HalfOrderRational(
        HalfOrderPolynomial(r.num.array / lead), HalfOrderPolynomial(r.den.array / lead)
    )


def _horner(c: np.ndarray, z):
    """Value and derivative of the ascending-coefficient polynomial ``c`` at ``z``."""
    p = np.zeros_like(z) + c[-1]
    dp = np.zeros_like(z)
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _companion_eigvals(c: np.ndarray) -> np.ndarray:
    n = len(c) - 1
    m = np.zeros((n, n))
    m[1:, :-1] = np.eye(n - 1)
    m[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(m)


def _polish(c: np.ndarray, z, tol: float, max_iter: int = 60):
    """Newton refinement that only accepts residual-reducing steps."""
    weights = np.abs(c)
    p, dp = _horner(c, z)
    res = abs(p)
    for _ in range(max_iter):
        if res == 0 or dp == 0:
            break
        znew = z - p / dp
        pn, dpn = _horner(c, znew)
        if not abs(pn) < res:
            break
        z, p, dp, res = znew, pn, dpn, abs(pn)
    floor = 64 * _EPS * float(np.sum(weights * np.abs(z) ** np.arange(len(c))))
    return z, res, max(tol, floor)


def roots(p: HalfOrderPolynomial, scale: float | None = None) -> np.ndarray:
    """All ``deg(p)`` roots of ``p`` in the ``w`` plane, with multiplicity.

    Companion-matrix eigenvalues followed by Newton polishing.  Complex roots
    are polished one per conjugate pair and the partner is set to the exact
    conjugate, so the returned multiset is conjugate-closed by construction.

    Parameters
    ----------
    p : HalfOrderPolynomial
        Polynomial of degree at least 1.
    scale : float, optional
        Substitution ``w = scale * v`` applied when the coefficients exceed
        ``1e12`` in magnitude; roots are returned unscaled.

    Raises
    ------
    ValidationError
        If ``p`` is constant.
    NoConvergence
        If a root cannot be polished to the residual tolerance.
    """
    if p.degree < 1:
        raise ValidationError("roots() needs a polynomial of degree >= 1")
    c = p.array
    factor = 1.0
    if scale is not None and np.max(np.abs(c)) > SCALE_GUARD:
        factor = float(scale)
        c = c * factor ** np.arange(len(c))
    c = c / c[-1]
    tol = 1e-10 * float(np.max(np.abs(c)))

    # exact zero roots are split off so the companion stays nonsingular
    nzero = int(np.flatnonzero(c)[0])
    out: list[complex] = [0j] * nzero
    c = c[nzero:]
    if len(c) > 1:
        ev = _companion_eigvals(c)
        upper = ev[ev.imag > 0]
        lower = ev[ev.imag < 0]
        real = ev[ev.imag == 0].real
        if len(upper) != len(lower):
            raise NoConvergence("eigenvalues are not conjugate-paired")
        for z0 in real:
            z, res, lim = _polish(c, float(z0), tol)
            if res > lim:
                raise NoConvergence(f"real root {z0!r} failed to polish (residual {res:.3e})")
            out.append(complex(z))
        for z0 in upper:
            z, res, lim = _polish(c, complex(z0), tol)
            if res > lim:
                raise NoConvergence(f"root {z0!r} failed to polish (residual {res:.3e})")
            z = complex(z.real, abs(z.imag)) if z.imag != 0 else complex(z.real, 0.0)
            out.extend([z, z.conjugate()])
    result = np.array(out, dtype=complex) * factor
    order = np.lexsort((result.imag, result.real))
    return result[order]


def conjugate_pairing_error(values: Sequence[complex]) -> float:
    """Largest distance between a value and its best conjugate partner."""
    v = np.asarray(values, dtype=complex)
    if v.size == 0:
        return 0.0
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(v[:, None] - np.conj(v)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def symmetrize(values: Sequence[complex]) -> np.ndarray:
    """Project a nearly conjugate-closed multiset onto an exactly closed one."""
    v = np.asarray(values, dtype=complex)
    if v.size == 0:
        return v
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(v[:, None] - np.conj(v)[None, :])
    _, cols = linear_sum_assignment(cost)
    out = v.copy()
    done = np.zeros(v.size, dtype=bool)
    for i, j in enumerate(cols):
        if done[i]:
            continue
        if i == j or cols[j] != i:
            out[i] = v[i].real
            done[i] = True
            continue
        m = 0.5 * (v[i] + np.conj(v[j]))
        out[i], out[j] = m, np.conj(m)
        done[i] = done[j] = True
    return out
