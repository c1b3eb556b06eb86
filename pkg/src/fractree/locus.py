"""Half-order zero/pole loci of the damage disturbance as the damage amount varies.

A locus is traced from ``eps = 1 - delta`` (all roots clustered at
``-sqrt(k/b)``) towards ``eps -> 0``.  Roots at consecutive samples are
matched by a minimum-total-displacement assignment, and steps that jump
further than the continuity bound are bisected.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from ._parallel import pmap
from .core import HalfOrderPolynomial, HalfOrderRational, conjugate_pairing_error, roots, symmetrize
from .errors import ContinuityFailure, DegenerateAllRootsEqual, IllConditioned, OutOfValidity, ValidationError
from .tree import Kind, Location, TreeParams, delta_for

MAX_FIT_DEGREE = 17
MAX_REFINEMENTS = 12
DIVERGENT_CLIP = 0.01


@dataclass(frozen=True, eq=False)
class ZeroPoleSet:
    """Half-order zeros and poles (the ``-z_j`` and ``-p_j``) in the w-plane."""

    zeros: np.ndarray
    poles: np.ndarray
    params_c: float

    def __post_init__(self):
        z = np.array(self.zeros, dtype=complex)
        p = np.array(self.poles, dtype=complex)
        if z.size != p.size:
            raise ValidationError("zero and pole counts differ")
        z.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "poles", p)

    @property
    def generation(self) -> int:
        return self.zeros.size // 2

    @property
    def max_real_part(self) -> float:
        return float(max(self.zeros.real.max(initial=-np.inf), self.poles.real.max(initial=-np.inf)))

    @property
    def pairing_error(self) -> float:
        return max(conjugate_pairing_error(self.zeros), conjugate_pairing_error(self.poles))

    def fixed_zero_error(self) -> float:
        return float(np.min(np.abs(self.zeros + self.params_c)))

    def delta(self) -> HalfOrderRational:
        return HalfOrderRational(
            HalfOrderPolynomial.from_roots(self.zeros), HalfOrderPolynomial.from_roots(self.poles)
        )


def _deflate(p: HalfOrderPolynomial, root: float) -> HalfOrderPolynomial:
    """Divide out the linear factor ``(w - root)``."""
    q, _ = P.polydiv(p.array, np.array([-root, 1.0]))
    return HalfOrderPolynomial(q)


def zero_pole_set(delta: HalfOrderRational, params: TreeParams) -> ZeroPoleSet:
    """Roots of numerator and denominator; the fixed zero ``-c`` is deflated first.

    The returned zeros have ``-c`` in slot 0.  The undamaged disturbance has
    no free roots and raises :class:`DegenerateAllRootsEqual`, whose
    ``convention`` attribute places every root at ``-c``.
    """
    c = params.c
    num, den = delta.num, delta.den
    if num.degree != den.degree or num.degree < 1:
        raise ValidationError("expected a disturbance with equal, nonzero degrees")
    scale = max(np.max(np.abs(num.array)), np.max(np.abs(den.array)))
    if np.max(np.abs(num.array - den.array)) <= 1e-14 * scale:
        n = num.degree
        conv = ZeroPoleSet(np.full(n, -c + 0j), np.full(n, -c + 0j), c)
        raise DegenerateAllRootsEqual("undamaged disturbance: all roots sit at -sqrt(k/b)", conv)
    cof = _deflate(num, -c)
    zeros = np.concatenate([[-c + 0j], roots(cof, scale=c) if cof.degree else []])
    poles = roots(den, scale=c)
    return ZeroPoleSet(zeros, poles, c)


def default_schedule(n: int = 400, delta: float = 1e-3, eps_min: float = 1e-3) -> np.ndarray:
    return np.geomspace(1 - delta, eps_min, n)


@dataclass(frozen=True, eq=False)
class LocusTable:
    """Root trajectories aligned with a strictly decreasing damage schedule.

    ``zero_traj`` and ``pole_traj`` have shape ``(2g, len(eps_samples))``;
    zero slot 0 is the fixed zero.
    """

    location: Location
    params: TreeParams
    eps_samples: np.ndarray
    zero_traj: np.ndarray
    pole_traj: np.ndarray

    def trajectories(self):
        for kind, traj in (("zero", self.zero_traj), ("pole", self.pole_traj)):
            for j, row in enumerate(traj):
                yield kind, j, row

    def at(self, i: int) -> ZeroPoleSet:
        return ZeroPoleSet(self.zero_traj[:, i], self.pole_traj[:, i], self.params.c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "root_kind", "slot_index", "re", "im"])
        for i, eps in enumerate(self.eps_samples):
            for kind, j, row in self.trajectories():
                w.writerow([_g17(eps), kind, j, _g17(row[i].real), _g17(row[i].imag)])
        return buf.getvalue()


def _g17(x: float) -> str:
    return repr(float(x))


def _continuity_bound(disp: np.ndarray, prev: np.ndarray, c: float) -> np.ndarray:
    """Per-root displacement limit for one step.

    ``max(0.2*c, 3*median step)``, widened to ``0.2*|root|`` for roots far
    from the origin so that diverging damper roots do not force bisection.
    """
    med = 3.0 * float(np.median(disp)) if disp.size else 0.0
    return np.maximum(max(0.2 * c, med), 0.2 * np.abs(prev))


def _match(prev: np.ndarray, cur: np.ndarray, fixed_first: bool):
    """Permute ``cur`` to follow ``prev``; returns (permuted, displacements)."""
    if fixed_first:
        head, p, q = cur[:1], prev[1:], cur[1:]
    else:
        head, p, q = cur[:0], prev, cur
    if q.size:
        _, cols = linear_sum_assignment(np.abs(p[:, None] - q[None, :]))
        q = q[cols]
    out = np.concatenate([head, q])
    return out, np.abs(out - prev)


def trace_locus(
    location: Location,
    params: TreeParams,
    schedule=None,
) -> LocusTable:
    """Trace every zero and pole of ``Delta`` along a decreasing damage schedule.

    Raises
    ------
    ContinuityFailure
        When a step still exceeds the continuity bound after
        ``MAX_REFINEMENTS`` bisections.
    """
    eps = default_schedule() if schedule is None else np.asarray(schedule, dtype=float)
    if eps.ndim != 1 or eps.size < 2:
        raise ValidationError("schedule needs at least two samples")
    if np.any(np.diff(eps) >= 0):
        raise ValidationError("schedule must be strictly decreasing")
    if eps[0] >= 1 or eps[-1] < 1e-3:
        raise ValidationError("schedule must lie in [1e-3, 1)")
    c = params.c

    def solve(e: float) -> ZeroPoleSet:
        return zero_pole_set(delta_for(location.damaged(float(e)), params), params)

    sets = pmap(solve, eps)
    out_eps = [float(eps[0])]
    zs = [np.asarray(sets[0].zeros)]
    ps = [np.asarray(sets[0].poles)]

    def advance(e_hi, z_hi, p_hi, e_lo, zps_lo, level):
        z, dz = _match(z_hi, zps_lo.zeros, True)
        p, dp = _match(p_hi, zps_lo.poles, False)
        ok = np.all(dz <= _continuity_bound(dz[1:], z_hi, c)) and np.all(dp <= _continuity_bound(dp, p_hi, c))
        if ok:
            return [(e_lo, z, p)]
        if level >= MAX_REFINEMENTS:
            raise ContinuityFailure(
                f"root tracking discontinuous between eps={e_hi:.6g} and eps={e_lo:.6g}",
                (e_hi, e_lo),
            )
        e_mid = 0.5 * (e_hi + e_lo)
        first = advance(e_hi, z_hi, p_hi, e_mid, solve(e_mid), level + 1)
        _, z_mid, p_mid = first[-1]
        return first + advance(e_mid, z_mid, p_mid, e_lo, zps_lo, level + 1)

    for e_lo, zps_lo in zip(eps[1:], sets[1:]):
        for e_new, z, p in advance(out_eps[-1], zs[-1], ps[-1], float(e_lo), zps_lo, 0):
            out_eps.append(e_new)
            zs.append(z)
            ps.append(p)

    zt = np.array(zs).T
    pt = np.array(ps).T
    for a in (zt, pt):
        a.setflags(write=False)
    eps_arr = np.array(out_eps)
    eps_arr.setflags(write=False)
    return LocusTable(location, params, eps_arr, zt, pt)


@dataclass(frozen=True, eq=False)
class TrajectoryFit:
    kind: str
    slot: int
    re_coeffs: np.ndarray
    im_coeffs: np.ndarray
    residual: float
    eps_range: tuple[float, float]
    diagnostic_residual: float | None = None

    def __call__(self, epsilon):
        return P.polyval(epsilon, self.re_coeffs) + 1j * P.polyval(epsilon, self.im_coeffs)


@dataclass(frozen=True, eq=False)
class LocusFit:
    location: Location
    params: TreeParams
    degree: int
    zero_fits: tuple[TrajectoryFit, ...]
    pole_fits: tuple[TrajectoryFit, ...]
    validity: tuple[float, float] = field(default=(0.0, 1.0))

    @property
    def residual(self) -> float:
        return max(f.residual for f in self.zero_fits + self.pole_fits)

    def to_dict(self) -> dict:
        return {
            "location": str(self.location),
            "k": self.params.k,
            "b": self.params.b,
            "degree": self.degree,
            "validity": list(self.validity),
            "trajectories": [
                {
                    "kind": f.kind,
                    "slot": f.slot,
                    "re_coeffs": [float(x) for x in f.re_coeffs],
                    "im_coeffs": [float(x) for x in f.im_coeffs],
                    "residual": f.residual,
                    "eps_range": list(f.eps_range),
                }
                for f in self.zero_fits + self.pole_fits
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LocusFit":
        zf, pf = [], []
        for t in data["trajectories"]:
            fit = TrajectoryFit(
                t["kind"], int(t["slot"]), np.array(t["re_coeffs"], dtype=float),
                np.array(t["im_coeffs"], dtype=float), float(t["residual"]), tuple(t["eps_range"]),
            )
            (zf if fit.kind == "zero" else pf).append(fit)
        return cls(
            Location.parse(data["location"]), TreeParams(data["k"], data["b"]), int(data["degree"]),
            tuple(zf), tuple(pf), tuple(data["validity"]),
        )


def _lsq_monomial(eps: np.ndarray, y: np.ndarray, degree: int) -> np.ndarray:
    """Least squares on ``eps**0..eps**degree``, solved in a Chebyshev basis.

    The fit is set up on the sample interval mapped to ``[-1, 1]`` and the
    result converted to monomials in ``eps``.
    """
    if np.ptp(y) == 0:
        out = np.zeros(degree + 1)
        out[0] = y[0]
        return out
    lo, hi = float(eps.min()), float(eps.max())
    t = (2 * eps - (lo + hi)) / (hi - lo)
    V = C.chebvander(t, degree)
    coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < degree + 1:
        raise IllConditioned(f"design matrix rank {rank} < {degree + 1}")
    # t = a*eps + b  ->  monomial coefficients in eps
    mono_t = C.cheb2poly(coef)
    a, b = 2 / (hi - lo), -(lo + hi) / (hi - lo)
    out = np.zeros(1)
    lin = np.array([b, a])
    powk = np.ones(1)
    for ck in mono_t:
        out = P.polyadd(out, ck * powk)
        powk = P.polymul(powk, lin)
    out = np.concatenate([out, np.zeros(degree + 1 - out.size)])[: degree + 1]
    if not np.all(np.isfinite(out)):
        raise IllConditioned("monomial conversion overflowed")
    return out


def _divergent(table: LocusTable) -> set[tuple[str, int]]:
    """Damper-damage trajectories that run off beyond ``10*c`` as eps -> 0."""
    if table.location.kind is not Kind.DAMPER:
        return set()
    lim = 10 * table.params.c
    return {(kind, j) for kind, j, row in table.trajectories() if abs(row[-1]) > lim}


def fit_locus(table: LocusTable, degree: int, mask=None) -> LocusFit:
    """Fit every trajectory's real and imaginary part as a polynomial in ``eps``.

    ``mask`` optionally selects the samples used (e.g. a training split).
    For damper damage the trajectories that diverge as ``eps -> 0`` are fit
    only on ``eps >= 0.01``; their residual after multiplying by
    ``sqrt(eps)`` over the full range is kept as a diagnostic.
    """
    if int(degree) != degree or not 0 <= degree <= MAX_FIT_DEGREE:
        raise ValidationError(f"fit degree must be in [0, {MAX_FIT_DEGREE}]")
    eps_all = np.asarray(table.eps_samples)
    use = np.ones(eps_all.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    divergent = _divergent(table)

    def fit_one(kind: str, slot: int, row: np.ndarray) -> TrajectoryFit:
        sel = use.copy()
        diag = None
        if (kind, slot) in divergent:
            comp = row[use] * np.sqrt(eps_all[use])
            cr = _lsq_monomial(eps_all[use], comp.real, degree)
            ci = _lsq_monomial(eps_all[use], comp.imag, degree)
            approx = P.polyval(eps_all[use], cr) + 1j * P.polyval(eps_all[use], ci)
            diag = float(np.max(np.abs(approx - comp)))
            sel &= eps_all >= DIVERGENT_CLIP
        e, y = eps_all[sel], row[sel]
        if e.size < 2 * (degree + 1):
            raise ValidationError(f"need at least {2 * (degree + 1)} samples, have {e.size}")
        re = _lsq_monomial(e, y.real, degree)
        im = _lsq_monomial(e, y.imag, degree)
        approx = P.polyval(e, re) + 1j * P.polyval(e, im)
        resid = float(np.max(np.abs(approx - y)))
        return TrajectoryFit(kind, slot, re, im, resid, (float(e.min()), float(e.max())), diag)

    jobs = list(table.trajectories())
    fits = pmap(lambda job: fit_one(*job), jobs, min_items=4)
    zf = tuple(f for f in fits if f.kind == "zero")
    pf = tuple(f for f in fits if f.kind == "pole")
    lo = max(f.eps_range[0] for f in fits)
    hi = min(f.eps_range[1] for f in fits)
    return LocusFit(table.location, table.params, int(degree), zf, pf, (lo, hi))


def eval_fit(fit: LocusFit, epsilon: float) -> ZeroPoleSet:
    """Zero/pole set predicted by a locus fit, re-symmetrized under conjugation."""
    lo, hi = fit.validity
    tol = 1e-12 * max(1.0, hi)
    if not (math.isfinite(epsilon) and lo - tol <= epsilon <= hi + tol):
        raise OutOfValidity(f"eps={epsilon!r} outside fitted range [{lo:.6g}, {hi:.6g}]")
    zeros = symmetrize(np.array([f(epsilon) for f in fit.zero_fits]))
    poles = symmetrize(np.array([f(epsilon) for f in fit.pole_fits]))
    return ZeroPoleSet(zeros, poles, fit.params.c)
