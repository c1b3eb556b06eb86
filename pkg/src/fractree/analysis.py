"""Frequency responses, Bode data and the H-infinity norm of the disturbance."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ._parallel import pmap
from .core import HalfOrderRational, evaluate, roots
from .errors import PoleOnAxis, ValidationError, ZeroMagnitude
from .response import FrequencyGrid, FrequencyResponse
from .search import bracket_around, bounded_minimize
from .tree import Location, TreeParams, delta_for

__all__ = [
    "FrequencyGrid",
    "FrequencyResponse",
    "BodeData",
    "NormSweepRow",
    "default_bode_grid",
    "sample_response",
    "bode",
    "hinf_norm",
    "norm_vs_epsilon",
]


def default_bode_grid(params: TreeParams | None = None, n: int = 400) -> FrequencyGrid:
    """400 log-spaced points over ``[1e-4, 1e4] * c**2 / 2`` rad/s."""
    scale = 1.0 if params is None else params.c**2 / 2
    return FrequencyGrid.log(1e-4 * scale, 1e4 * scale, n)


def sample_response(evaluator: Callable, grid: FrequencyGrid) -> FrequencyResponse:
    """Sample ``evaluator(j*omega)`` on every grid point.

    ``evaluator`` is any callable of ``s`` (a :class:`HalfOrderRational`
    qualifies); array-capable callables are called once with the whole grid.
    """
    grid = grid if isinstance(grid, FrequencyGrid) else FrequencyGrid(grid)
    s = grid.s
    try:
        vals = np.asarray(evaluator(s), dtype=complex)
        if vals.shape != s.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([complex(evaluator(x)) for x in s])
    return FrequencyResponse(grid, vals)


@dataclass(frozen=True, eq=False)
class BodeData:
    omega: np.ndarray
    magnitude_db: np.ndarray
    phase_deg: np.ndarray

    def rows(self):
        return zip(self.omega, self.magnitude_db, self.phase_deg)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega_rad_s", "mag_db", "phase_deg"])
        for row in self.rows():
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def bode(fr: FrequencyResponse) -> BodeData:
    """Magnitude in dB and phase in degrees, unwrapped from the lowest frequency."""
    mag = np.abs(fr.values)
    if np.any(mag == 0):
        raise ZeroMagnitude("response has a zero-magnitude sample")
    phase = np.degrees(np.unwrap(np.angle(fr.values)))
    return BodeData(np.array(fr.omegas), 20 * np.log10(mag), phase)


def _check_axis_poles(delta: HalfOrderRational, tol: float = 1e-9) -> None:
    if delta.den.degree == 0:
        return
    rts = roots(delta.den)
    if np.any(np.abs(rts) == 0):
        raise PoleOnAxis("pole at s = 0")
    # w = sqrt(omega) e^{+/- j pi/4} is the image of the imaginary s-axis
    if np.any(np.abs(np.abs(np.angle(rts)) - np.pi / 4) < tol):
        raise PoleOnAxis("disturbance has a pole on the imaginary axis")


def hinf_norm(
    delta: HalfOrderRational,
    params: TreeParams | None = None,
    n_grid: int = 2000,
    span: tuple[float, float] = (1e-6, 1e6),
    rtol: float = 1e-8,
) -> tuple[float, float]:
    """Peak of ``|Delta(j omega)|`` over ``omega > 0``.

    A log sweep over ``span * c**2`` locates the peak, then bounded Brent
    search on ``log(omega)`` between the neighbouring grid points refines it.

    Returns
    -------
    norm, argmax_omega : float
    """
    _check_axis_poles(delta)
    c = params.c if params is not None else math.sqrt(2.0)
    om = np.geomspace(span[0] * c * c, span[1] * c * c, n_grid)
    mags = np.abs(evaluate(delta, 1j * om))
    i = int(np.argmax(mags))
    best, best_om = float(mags[i]), float(om[i])
    lo, hi = bracket_around(np.log(om), i)

    def neg(x: float) -> float:
        return -abs(evaluate(delta, 1j * math.exp(x)))

    x, fx, _ = bounded_minimize(neg, lo, hi, tol=rtol)
    if -fx > best:
        best, best_om = -fx, math.exp(x)
    return best, best_om


@dataclass(frozen=True)
class NormSweepRow:
    location: Location
    epsilon: float
    hinf: float
    argmax_omega: float


def norm_vs_epsilon(
    locations: Iterable[Location], eps_grid: Sequence[float], params: TreeParams
) -> list[NormSweepRow]:
    """H-infinity norm for every (location, eps); sorted by location, then eps descending."""
    locations = sorted(set(locations))
    eps = sorted({float(e) for e in eps_grid}, reverse=True)
    for e in eps:
        if not 0 < e < 1:
            raise ValidationError(f"sweep eps must be in (0, 1), got {e!r}")

    def one(job):
        loc, e = job
        n, om = hinf_norm(delta_for(loc.damaged(e), params), params)
        return NormSweepRow(loc, e, n, om)

    return pmap(one, [(loc, e) for loc in locations for e in eps], min_items=16)


def norm_sweep_csv(rows: Iterable[NormSweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "index", "kind", "epsilon", "hinf", "argmax_omega"])
    for r in rows:
        w.writerow([
            r.location.generation, r.location.index, r.location.kind.value,
            repr(r.epsilon), repr(r.hinf), repr(r.argmax_omega),
        ])
    return buf.getvalue()
