"""Damage identification from a sampled disturbance response.

Two formulations of the same summed relative error are offered:

* unstructured: every half-order zero and pole is free (apart from the fixed
  zero at ``-sqrt(k/b)``), searched by multi-start Nelder-Mead;
* structured: all roots are slaved to the damage amount ``eps`` of a
  candidate location, so each candidate is a one-dimensional search.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from ._parallel import pmap
from .core import evaluate, half_order_variable
from .errors import GridMismatch, NoImprovement, ValidationError, ZeroTarget
from .locus import LocusFit, eval_fit
from .response import FrequencyGrid, FrequencyResponse
from .search import bracket_around, bounded_minimize
from .tree import Location, TreeParams, delta_for, undamaged_response

EPS_BOUNDS = (1e-3, 1 - 1e-3)


def default_id_grid(params: TreeParams | None = None, n: int = 200) -> FrequencyGrid:
    """200 log-spaced points over ``[1e-3, 1e3] * c**2 / 2`` rad/s."""
    scale = 1.0 if params is None else params.c**2 / 2
    return FrequencyGrid.log(1e-3 * scale, 1e3 * scale, n)


@dataclass(frozen=True)
class IdentificationTarget:
    response: FrequencyResponse
    assumed_generation: int
    params: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self):
        if len(self.response) == 0:
            raise ValidationError("target response is empty")
        if int(self.assumed_generation) != self.assumed_generation or self.assumed_generation < 1:
            raise ValidationError("assumed generation must be an integer >= 1")

    @property
    def grid(self) -> FrequencyGrid:
        return self.response.grid


@dataclass(frozen=True)
class IdentificationResult:
    mode: str
    error: float
    iterations: int
    converged: bool
    location: Location | None = None
    epsilon_hat: float | None = None
    zeros: np.ndarray | None = None
    poles: np.ndarray | None = None
    candidates: tuple[dict, ...] = ()
    seed: int | None = None
    baseline: float | None = None

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "location": None if self.location is None else str(self.location),
            "epsilon_hat": self.epsilon_hat,
            "error": self.error,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "candidates": [dict(c) for c in self.candidates],
        }
        if self.zeros is not None:
            out["zeros"] = [[float(z.real), float(z.imag)] for z in self.zeros]
            out["poles"] = [[float(p.real), float(p.imag)] for p in self.poles]
            out["baseline_error"] = self.baseline
        return out


def relative_error(candidate, target) -> float:
    """Sum over the grid of ``|candidate - target| / |target|``.

    Both arguments are :class:`FrequencyResponse` objects on the same grid,
    or plain arrays of equal length.
    """
    if isinstance(candidate, FrequencyResponse) and isinstance(target, FrequencyResponse):
        if candidate.grid != target.grid:
            raise GridMismatch("candidate and target use different grids")
    cand = np.asarray(getattr(candidate, "values", candidate), dtype=complex)
    tgt = np.asarray(getattr(target, "values", target), dtype=complex)
    if cand.shape != tgt.shape:
        raise GridMismatch("candidate and target lengths differ")
    mag = np.abs(tgt)
    if np.any(mag < 1e-300):
        raise ZeroTarget("target has a vanishing sample")
    return float(np.sum(np.abs(cand - tgt) / mag))


def synthesize_target(
    location: Location,
    epsilon: float,
    params: TreeParams,
    grid: FrequencyGrid | None = None,
    noise: float = 0.0,
    seed: int | None = None,
) -> IdentificationTarget:
    """Exact disturbance samples, optionally with multiplicative complex noise.

    With ``noise > 0`` each sample is scaled by ``1 + noise * (n1 + j n2) / sqrt(2)``
    for independent standard normals ``n1, n2``.
    """
    grid = grid or default_id_grid(params)
    vals = evaluate(delta_for(location.damaged(epsilon), params), grid.s)
    if noise:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(len(grid)) + 1j * rng.standard_normal(len(grid))
        vals = vals * (1 + noise * z / math.sqrt(2))
    return IdentificationTarget(FrequencyResponse(grid, vals), location.generation, params)


def load_target_csv(
    path: str | Path, assumed_generation: int, params: TreeParams, divide_out_ginf: bool = False
) -> IdentificationTarget:
    """Read ``omega_rad_s, re, im`` rows.

    With ``divide_out_ginf`` the samples are taken as the damaged plant
    ``G_inf * Delta`` and divided by ``G_inf`` first.
    """
    om, vals = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"omega_rad_s", "re", "im"} - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"target csv lacks columns: {sorted(missing)}")
        for line, row in enumerate(reader, start=2):
            try:
                om.append(float(row["omega_rad_s"]))
                vals.append(complex(float(row["re"]), float(row["im"])))
            except (TypeError, ValueError):
                raise ValidationError(f"{path}: line {line} is not numeric") from None
    grid = FrequencyGrid(om)
    v = np.array(vals)
    if divide_out_ginf:
        v = v / undamaged_response(params, grid.s)
    return IdentificationTarget(FrequencyResponse(grid, v), assumed_generation, params)


def write_target_csv(target: IdentificationTarget) -> str:
    lines = ["omega_rad_s,re,im"]
    for om, v in zip(target.grid.omegas, target.response.values):
        lines.append(f"{float(om)!r},{float(v.real)!r},{float(v.imag)!r}")
    return "\n".join(lines) + "\n"


# -- unstructured ---------------------------------------------------------------


def _unpack(x: np.ndarray, g: int):
    """Parameter vector -> (zero factors, pole factors) as quadratic/linear coefficients.

    Zeros: fixed ``(w + c)``, ``g-1`` quadratics ``w^2 + a^2 w + b^2`` and one
    linear ``w + r^2``; poles: ``g`` quadratics.  Squared parameters keep every
    root in the closed left half w-plane, and real quadratics keep each set
    closed under conjugation.
    """
    nq = g - 1
    zq = x[: 2 * nq].reshape(nq, 2) ** 2
    zl = x[2 * nq] ** 2
    pq = x[2 * nq + 1:].reshape(g, 2) ** 2
    return zq, zl, pq


def _factor_eval(w: np.ndarray, quads: np.ndarray) -> np.ndarray:
    out = np.ones_like(w)
    for p, q in quads:
        out = out * (w * w + p * w + q)
    return out


def _quad_roots(quads: np.ndarray) -> list[complex]:
    out = []
    for p, q in quads:
        d = np.sqrt(complex(p * p - 4 * q))
        out.extend([(-p + d) / 2, (-p - d) / 2])
    return out


def _start_vector(g: int, c: float, rng: np.random.Generator | None, scale: float) -> np.ndarray:
    def pair():
        if rng is None:
            re, im = -c, 0.0
        else:
            re = -c + scale * rng.standard_normal()
            im = scale * rng.standard_normal()
        re = min(re, -1e-3 * c)
        return [math.sqrt(-2 * re), math.sqrt(re * re + im * im)]

    x = []
    for _ in range(g - 1):
        x.extend(pair())
    r = c if rng is None else max(c + scale * rng.standard_normal(), 1e-3 * c)
    x.append(math.sqrt(r))
    for _ in range(g):
        x.extend(pair())
    return np.array(x)


def identify_unstructured(
    target: IdentificationTarget,
    starts: int = 16,
    seed: int = 0,
    perturbation: float = 0.5,
    max_iter: int = 2000,
    tol: float = 1e-10,
) -> IdentificationResult:
    """Fit free half-order zeros and poles to the target by multi-start Nelder-Mead.

    The first start is the undamaged configuration (all roots at ``-c``);
    the others perturb it by ``perturbation * c``, each from its own
    ``SeedSequence`` child so results do not depend on scheduling.
    """
    g = target.assumed_generation
    c = target.params.c
    w = half_order_variable(target.grid.s)
    tgt = target.response.values
    mag = np.abs(tgt)
    if np.any(mag < 1e-300):
        raise ZeroTarget("target has a vanishing sample")
    fixed = w + c

    def objective(x: np.ndarray) -> float:
        zq, zl, pq = _unpack(x, g)
        val = fixed * (w + zl) * _factor_eval(w, zq) / _factor_eval(w, pq)
        err = float(np.sum(np.abs(val - tgt) / mag))
        return err if math.isfinite(err) else math.inf

    baseline = float(np.sum(np.abs(1 - tgt) / mag))
    streams = np.random.SeedSequence(seed).spawn(starts)

    def run(i: int):
        rng = None if i == 0 else np.random.default_rng(streams[i])
        x = _start_vector(g, c, rng, perturbation * c)
        nit = 0
        # Nelder-Mead restarts shake the simplex loose from collapsed states
        for _ in range(3):
            res = minimize(
                objective, x, method="Nelder-Mead",
                options={"maxiter": max_iter, "maxfev": 2 * max_iter, "xatol": 1e-12, "fatol": tol, "adaptive": True},
            )
            nit += int(res.nit)
            improved = res.fun < objective(x) - tol
            x = res.x
            if not improved:
                break
        return float(res.fun), x, nit, bool(res.success)

    outcomes = pmap(run, range(starts), min_items=2)
    best_err, best_x, _, converged = min(outcomes, key=lambda o: o[0])
    # a target already matched by the undamaged model to tolerance is not a failure
    if baseline > tol * len(tgt) and best_err >= baseline:
        raise NoImprovement("no start improved on the undamaged baseline")
    zq, zl, pq = _unpack(best_x, g)
    zeros = np.array([-c, -zl] + _quad_roots(zq), dtype=complex)
    poles = np.array(_quad_roots(pq), dtype=complex)
    return IdentificationResult(
        mode="unstructured",
        error=best_err,
        iterations=sum(o[2] for o in outcomes),
        converged=converged,
        zeros=zeros,
        poles=poles,
        seed=seed,
        baseline=baseline,
    )


# -- structured -----------------------------------------------------------------


def _structured_model(location: Location, params: TreeParams, w: np.ndarray, source: str, fit: LocusFit | None):
    if source == "exact":
        def model(eps: float) -> np.ndarray:
            return delta_for(location.damaged(eps), params).evaluate_w(w)
    else:
        def model(eps: float) -> np.ndarray:
            zps = eval_fit(fit, eps)
            out = np.ones_like(w)
            for z, p in zip(zps.zeros, zps.poles):
                out = out * (w - z) / (w - p)
            return out
    return model


def _scan_and_refine(objective, lo: float, hi: float, n_scan: int, tol: float):
    xs = np.geomspace(lo, hi, n_scan)
    vals = [objective(float(x)) for x in xs]
    i = int(np.argmin(vals))
    a, b = bracket_around(np.log(xs), i)
    x, fx, it = bounded_minimize(lambda t: objective(math.exp(t)), a, b, tol=tol)
    if vals[i] <= fx:
        return float(xs[i]), float(vals[i]), n_scan
    return math.exp(x), fx, n_scan + it + 2


def identify_structured(
    target: IdentificationTarget,
    candidates: Iterable[Location],
    source: str = "exact",
    fits: dict | None = None,
    n_scan: int = 64,
    tol: float = 1e-10,
) -> IdentificationResult:
    """One-parameter search over ``eps`` at each candidate location.

    ``source="exact"`` rebuilds ``Delta(eps)`` exactly; ``source="locus-fit"``
    takes its roots from the per-candidate :class:`LocusFit` in ``fits``.
    Every candidate's best ``eps`` and error is kept in ``candidates`` so that
    near-ties (mirror locations share poles) stay visible.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValidationError("no candidate locations")
    if source not in ("exact", "locus-fit"):
        raise ValidationError(f"unknown source {source!r}")
    if source == "locus-fit":
        fits = fits or {}
        missing = [str(c) for c in candidates if c not in fits]
        if missing:
            raise ValidationError(f"locus fits missing for {missing}")
    params = target.params
    w = half_order_variable(target.grid.s)
    tgt = target.response.values
    if np.any(np.abs(tgt) < 1e-300):
        raise ZeroTarget("target has a vanishing sample")

    def one(loc: Location):
        fit = fits.get(loc) if source == "locus-fit" else None
        model = _structured_model(loc, params, w, source, fit)
        lo, hi = EPS_BOUNDS
        if fit is not None:
            lo, hi = max(lo, fit.validity[0]), min(hi, fit.validity[1])

        def objective(eps: float) -> float:
            return relative_error(model(eps), tgt)

        eps, err, n = _scan_and_refine(objective, lo, hi, n_scan, tol)
        return loc, eps, err, n

    rows = pmap(one, candidates, min_items=4)
    loc, eps, err, _ = min(rows, key=lambda r: r[2])
    table = tuple({"location": str(r[0]), "epsilon_hat": r[1], "error": r[2]} for r in rows)
    return IdentificationResult(
        mode="structured",
        error=err,
        iterations=sum(r[3] for r in rows),
        converged=True,
        location=loc,
        epsilon_hat=eps,
        candidates=table,
    )


def error_curve(location: Location, target: IdentificationTarget, eps_grid: Sequence[float]) -> list[tuple[float, float]]:
    """Identification error of the exact model at each ``eps`` of the grid."""
    w = half_order_variable(target.grid.s)
    out = []
    for e in eps_grid:
        e = float(e)
        if not 0 < e < 1:
            raise ValidationError(f"eps must be in (0, 1), got {e!r}")
        model = delta_for(location.damaged(e), target.params).evaluate_w(w)
        out.append((e, relative_error(model, target.response.values)))
    return out
