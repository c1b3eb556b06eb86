"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE n: PASS|FAIL`` line (repeated in the
pytest terminal summary) before asserting.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

import oracles
from fractree import (
    ConstantsOverride,
    FrequencyGrid,
    Kind,
    Location,
    TerminationMode,
    TreeParams,
    delta_for,
    enumerate_locations,
    error_curve,
    eval_fit,
    evaluate,
    finite_tree_response,
    fit_locus,
    hinf_norm,
    identify_structured,
    recurrence_step,
    roots,
    trace_locus,
    undamaged_response,
    zero_pole_set,
)
from fractree.analysis import default_bode_grid
from fractree.identify import synthesize_target
from fractree.locus import default_schedule

P = TreeParams(2.0, 1.0)
C = P.c


def test_01_fixed_point(report):
    rng = np.random.default_rng(101)
    om = 10 ** rng.uniform(-3, 3, 100)
    s = 1j * om
    g = undamaged_response(P, s)
    out = recurrence_step(g, g, P.k, P.b, s)
    ref = oracles.g_inf(P.k, P.b, om)
    err = float(np.max(np.abs(out - ref) / np.abs(ref)))
    assert report(1, err <= 1e-12, f"fixed point of the recurrence, max rel err {err:.2e} (tol 1e-12)")


def test_02_base_case_closed_forms(report):
    grid = default_bode_grid(P)
    root_err = eval_err = 0.0
    for kind in ("spring", "damper"):
        for eps in (0.9, 0.5, 0.1, 0.01):
            d = delta_for(Location(1, 1, Kind(kind)).damaged(eps), P)
            zref, pref = oracles.base_case_roots(kind, eps)
            root_err = max(
                root_err,
                oracles.match_distance(roots(d.num), zref),
                oracles.match_distance(roots(d.den), pref),
            )
            num, den = oracles.base_case_coeffs(kind, eps)
            ref = oracles.rational_at(num, den, grid.omegas)
            got = evaluate(d, grid.s)
            eval_err = max(eval_err, float(np.max(np.abs(got - ref) / np.abs(ref))))
    ok = root_err <= 1e-8 and eval_err <= 1e-10
    assert report(2, ok, f"generation-1 closed forms, root err {root_err:.2e} (1e-8), eval rel err {eval_err:.2e} (1e-10)")


def test_03_induction_consistency(report):
    rng = np.random.default_rng(303)
    om = np.sort(10 ** rng.uniform(-3, 3, 50))
    grid = FrequencyGrid(om)
    worst = 0.0
    for loc in enumerate_locations(4):
        for eps in (0.5, 0.05):
            dmg = loc.damaged(eps)
            analytic = undamaged_response(P, grid.s) * evaluate(delta_for(dmg, P), grid.s)
            finite = finite_tree_response(
                loc.generation, ConstantsOverride.from_damage(dmg, P), TerminationMode.TAIL, P, grid
            ).values
            worst = max(worst, float(np.max(np.abs(analytic - finite) / np.abs(analytic))))
    assert report(3, worst <= 1e-9, f"closed form vs tail-closure tree, g<=4, max rel err {worst:.2e} (1e-9)")


def test_04_structure_invariants(report):
    bad = []
    worst_dc = worst_zero = 0.0
    for loc in enumerate_locations(5):
        for eps in (0.9, 0.5, 0.25, 0.05, 0.01):
            d = delta_for(loc.damaged(eps), P)
            g = loc.generation
            dc = abs(d.num.coeffs[0] / d.den.coeffs[0] - 1)
            zero = float(np.min(np.abs(roots(d.num) + C)))
            worst_dc, worst_zero = max(worst_dc, dc), max(worst_zero, zero)
            monic = d.num.leading == 1.0 and d.den.leading == 1.0
            if d.num.degree != 2 * g or d.den.degree != 2 * g or not monic or dc > 1e-9 or zero > 1e-9:
                bad.append((str(loc), eps))
    detail = f"g<=5 deg/monic/dc/fixed zero, {len(bad)} violations, dc err {worst_dc:.1e}, -c root err {worst_zero:.1e}"
    assert report(4, not bad, detail), bad[:5]


def test_05_mirror_poles(report):
    worst = 0.0
    for g in (2, 3, 4):
        half = 2 ** (g - 2)
        for kind in Kind:
            for n in range(1, half + 1):
                for eps in (0.5, 0.05):
                    a = delta_for(Location(g, n, kind).damaged(eps), P).den.array
                    b = delta_for(Location(g, n + half, kind).damaged(eps), P).den.array
                    worst = max(worst, float(np.max(np.abs(a - b))))
    assert report(5, worst <= 1e-12, f"mirror denominators, g in 2..4, max coefficient diff {worst:.1e} (1e-12)")


def test_06_damper_divergence(report):
    sched = np.concatenate([default_schedule(), [1e-3]])
    low_b = []
    high_k = 0.0
    for loc in enumerate_locations(2):
        if loc.kind is Kind.DAMPER:
            low_b.append(float(np.max(np.abs(zero_pole_set(delta_for(loc.damaged(1e-3), P), P).poles))))
        else:
            for e in sched:
                high_k = max(high_k, float(np.max(np.abs(zero_pole_set(delta_for(loc.damaged(e), P), P).poles))))
    ok = min(low_b) > 10 * C and high_k < 100 * C
    assert report(
        6, ok,
        f"damper max |pole| at eps=1e-3 >= {min(low_b) / C:.1f}c (need >10c); spring max |pole| {high_k / C:.2f}c (need <100c)",
    )


def test_07_truncation_convergence(report):
    depths = (4, 8, 12, 16, 20)
    oms = (0.1, 1.0, 10.0)
    grid = FrequencyGrid(oms)
    ref = oracles.g_inf(P.k, P.b, np.array(oms))
    errs = np.array([
        np.abs(finite_tree_response(d, ConstantsOverride(), TerminationMode.RIGID, P, grid).values - ref) / np.abs(ref)
        for d in depths
    ])
    ok = bool(np.all(np.diff(errs, axis=0) < 0))
    detail = "; ".join(f"w={o:g}: " + " > ".join(f"{e:.1e}" for e in errs[:, i]) for i, o in enumerate(oms))
    assert report(7, ok, f"rigid truncation error decreasing, {detail}")


def test_08_hinf_bound(report):
    gen1 = {}
    worst_bound = np.inf
    worst_dense = 0.0
    for eps in (0.5, 0.1, 0.01):
        top = max(hinf_norm(delta_for(Location(1, 1, k).damaged(eps), P), P)[0] for k in Kind)
        for loc in enumerate_locations(3):
            d = delta_for(loc.damaged(eps), P)
            n, _ = hinf_norm(d, P)
            dense, _ = oracles.dense_peak(d.num.array, d.den.array, C)
            worst_dense = max(worst_dense, abs(n - dense) / dense)
            worst_bound = min(worst_bound, top - n)
        gen1[eps] = top
    ok = worst_bound >= -1e-9 and worst_dense <= 1e-6
    assert report(
        8, ok,
        f"generation-1 bound slack min {worst_bound:.2e} (>= -1e-9); vs 1e6-point sweep max rel diff {worst_dense:.1e} (1e-6)",
    )


@pytest.fixture(scope="module")
def k21_tables():
    loc = Location(2, 1, Kind.SPRING)
    return loc, trace_locus(loc, P)


def test_09_structured_identification(report):
    truth = Location(2, 1, Kind.SPRING)
    target = synthesize_target(truth, 0.01, P)
    cands = enumerate_locations(2)
    exact = identify_structured(target, cands, source="exact")
    fits = {loc: fit_locus(trace_locus(loc, P), 17) for loc in cands}
    fitted = identify_structured(target, cands, source="locus-fit", fits=fits)
    ok = (
        exact.location == truth and abs(exact.epsilon_hat - 0.01) <= 1e-3
        and fitted.location == truth and 0.008 <= fitted.epsilon_hat <= 0.013
    )
    assert report(
        9, ok,
        f"k_2,1 eps=0.01: exact -> {exact.location} {exact.epsilon_hat:.6f}; locus-fit -> {fitted.location} {fitted.epsilon_hat:.6f}",
    )


def test_10_error_curve_minima(report):
    loc = Location(1, 1, Kind.SPRING)
    grid_eps = np.round(np.linspace(0.01, 0.99, 99), 12)
    step = grid_eps[1] - grid_eps[0]
    ok = True
    slopes = {}
    parts = []
    for truth in (0.6, 0.25, 0.05):
        target = synthesize_target(loc, truth, P)
        curve = error_curve(loc, target, grid_eps)
        e_min = curve[int(np.argmin([v for _, v in curve]))][0]
        at_truth = error_curve(loc, target, [truth])[0][1]
        h = 1e-3
        side = error_curve(loc, target, [truth - h, truth + h])
        slopes[truth] = (side[0][1] + side[1][1]) / (2 * h)
        ok &= abs(e_min - truth) <= step + 1e-12 and at_truth <= 1e-9
        parts.append(f"eps={truth}: argmin {e_min:.2f}, err@truth {at_truth:.1e}, slope {slopes[truth]:.1f}")
    ok &= slopes[0.05] > slopes[0.6]
    assert report(10, ok, "; ".join(parts))


def test_11_locus_fidelity(report, k21_tables):
    sched = default_schedule()
    g1_err = 0.0
    for kind in ("spring", "damper"):
        table = trace_locus(Location(1, 1, Kind(kind)), P, sched)
        for traj, which in ((table.zero_traj, 0), (table.pole_traj, 1)):
            refs = np.array([oracles.base_case_roots(kind, e)[which] for e in table.eps_samples]).T
            for row in traj:
                j = int(np.argmin(np.abs(refs[:, 0] - row[0])))
                g1_err = max(g1_err, float(np.max(np.abs(row - refs[j]))))

    loc, table = k21_tables
    train = np.zeros(table.eps_samples.size, dtype=bool)
    train[::2] = True
    fit = fit_locus(table, 17, mask=train)
    held = 0.0
    held_at = None
    for i in np.flatnonzero(~train):
        e = float(table.eps_samples[i])
        if not fit.validity[0] <= e <= fit.validity[1]:
            continue
        pred = eval_fit(fit, e)
        truth = table.at(i)
        d = max(oracles.match_distance(pred.zeros, truth.zeros), oracles.match_distance(pred.poles, truth.poles))
        if d > held:
            held, held_at = d, e
    ok = g1_err <= 1e-8 and held <= 1e-2 * C
    detail = (
        f"g=1 loci vs closed form {g1_err:.1e} (1e-8); k_2,1 degree-17 train residual {fit.residual / C:.4f}c, "
        f"held-out max {held / C:.4f}c at eps={held_at:.4f} (need <= 0.01c)"
    )
    assert report(11, ok, detail)


def _cli(args, threads):
    env = dict(os.environ, FRACTREE_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "fractree", *args], env=env, capture_output=True, check=True)


def test_12_determinism(report, tmp_path):
    runs = [
        ["synthesize", "--location", "2:1:spring", "--epsilon", "0.25", "--noise", "0.01", "--seed", "7"],
        ["locus", "--location", "2:2:damper", "--eps-points", "120"],
        ["norm-sweep", "--locations", "g<=2", "--eps", "0.05:0.95:10"],
        ["fit", "--location", "1:1:spring", "--degree", "6"],
    ]
    outputs = []
    for threads in (1, 4):
        one = []
        target = tmp_path / f"target{threads}.csv"
        for args in runs:
            one.append(_cli(args, threads).stdout)
        target.write_bytes(one[0])
        one.append(_cli(["identify", "--mode", "unstructured", "--target", str(target), "--generation", "1",
                         "--starts", "4", "--seed", "3"], threads).stdout)
        one.append(_cli(["identify", "--target", str(target), "--candidates", "g<=2"], threads).stdout)
        outputs.append(one)
    same = [a == b and len(a) > 0 for a, b in zip(*outputs)]
    assert report(12, all(same), f"{sum(same)}/{len(same)} CLI outputs byte-identical across repeat runs (1 and 4 threads)")
