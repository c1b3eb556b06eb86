import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fractree import HalfOrderPolynomial, HalfOrderRational, Kind, Location, TreeParams, delta_for, evaluate, normalize, poly_mul, roots
from fractree.core import conjugate_pairing_error, half_order_variable, symmetrize
from fractree.errors import NoConvergence, NonFinite, PoleProximity, ValidationError, ZeroDenominator

R2 = math.sqrt(2)
coeff = st.floats(min_value=-10, max_value=10, allow_nan=False).filter(lambda x: abs(x) > 1e-3)


def test_trailing_zeros_stripped():
    p = HalfOrderPolynomial([1.0, 2.0, 0.0, 0.0])
    assert p.coeffs == (1.0, 2.0)
    assert p.degree == 1
    assert HalfOrderPolynomial([0.0, 0.0]).is_zero()


def test_nonfinite_and_complex_coeffs_rejected():
    with pytest.raises(NonFinite):
        HalfOrderPolynomial([1.0, float("nan")])
    with pytest.raises(ValidationError):
        HalfOrderPolynomial([1.0, 1j])


def test_poly_mul_examples():
    assert poly_mul(HalfOrderPolynomial([1, 1]), HalfOrderPolynomial([-1, 1])).coeffs == (-1.0, 0.0, 1.0)
    p = HalfOrderPolynomial([3.0, -1.0, 2.0])
    assert poly_mul(p, HalfOrderPolynomial.one()) == p
    base = poly_mul(HalfOrderPolynomial([R2, 1]), HalfOrderPolynomial([R2 / 2, 1]))
    np.testing.assert_allclose(base.array, [1.0, 2.1213203435596424, 1.0], rtol=1e-15)


@given(st.lists(coeff, min_size=1, max_size=6), st.lists(coeff, min_size=1, max_size=6))
def test_poly_mul_degree_adds(a, b):
    pa, pb = HalfOrderPolynomial(a), HalfOrderPolynomial(b)
    assert poly_mul(pa, pb).degree == pa.degree + pb.degree


def test_evaluate_examples():
    assert evaluate(HalfOrderRational.one(), 3 + 4j) == 1 + 0j
    ginf = HalfOrderRational([1.0], [0.0, R2])
    np.testing.assert_allclose(evaluate(ginf, 1j), 0.5 - 0.5j, rtol=1e-15)
    undamaged = delta_for(Location(2, 1, Kind.SPRING).damaged(1.0), TreeParams())
    np.testing.assert_allclose(evaluate(undamaged, 7j), 1.0, rtol=1e-15)


def test_evaluate_guards():
    with pytest.raises(PoleProximity):
        evaluate(HalfOrderRational([1.0], [0.0, 1.0]), 0.0)
    with pytest.raises(NonFinite):
        evaluate(HalfOrderRational.one(), complex("nan"))


def test_branch_on_imaginary_axis():
    om = np.geomspace(1e-6, 1e6, 101)
    w = half_order_variable(1j * om)
    assert np.all(np.angle(w) == np.pi / 4)
    np.testing.assert_array_equal(half_order_variable(-1j * om), np.conj(w))
    np.testing.assert_allclose(w, oracles.w_of_omega(om), rtol=1e-15)


def test_normalize():
    r = normalize(HalfOrderRational([2, 2], [4, 2]))
    assert r.num.coeffs == (1.0, 1.0) and r.den.coeffs == (2.0, 1.0)
    with pytest.raises(ZeroDenominator):
        HalfOrderRational([1.0], [0.0])


def test_roots_examples():
    np.testing.assert_allclose(roots(HalfOrderPolynomial([-2, 0, 1])), [-R2, R2], rtol=1e-15)
    np.testing.assert_allclose(roots(HalfOrderPolynomial([2, 2, 1])), [-1 - 1j, -1 + 1j], rtol=1e-15)
    den = delta_for(Location(1, 1, Kind.SPRING).damaged(0.5), TreeParams()).den
    np.testing.assert_allclose(roots(den), [-R2 / 2 - R2 / 2 * 1j, -R2 / 2 + R2 / 2 * 1j], atol=1e-12)


def test_roots_rejects_constant():
    with pytest.raises(ValidationError):
        roots(HalfOrderPolynomial([3.0]))


def test_roots_zero_root_split():
    r = roots(HalfOrderPolynomial([0, 0, -1, 1]))
    np.testing.assert_allclose(sorted(r.real), [0, 0, 1], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(coeff, min_size=2, max_size=9))
def test_roots_residual_and_conjugate_closure(cs):
    p = HalfOrderPolynomial(cs)
    r = roots(p)
    assert len(r) == p.degree
    assert conjugate_pairing_error(r) <= 1e-8
    monic = p.array / p.leading
    scale = np.max(np.abs(monic))
    res = np.abs(np.polyval(monic[::-1], r))
    roundoff = 64 * np.finfo(float).eps * np.polyval(np.abs(monic[::-1]), np.abs(r))
    assert np.all(res <= np.maximum(1e-10 * scale, roundoff))


def test_roots_large_coefficients_rescaled():
    true = np.array([-3e4, -1e4 - 2e4j, -1e4 + 2e4j, -5e3])
    p = HalfOrderPolynomial.from_roots(true)
    assert np.max(np.abs(p.array)) > 1e12
    r = roots(p, scale=1e4)
    assert oracles.match_distance(r, true) <= 1e-8 * 3e4


def test_evaluation_matches_factorization():
    rng = np.random.default_rng(5)
    d = delta_for(Location(3, 3, Kind.SPRING).damaged(0.2), TreeParams())
    z, p = roots(d.num), roots(d.den)
    om = 10 ** rng.uniform(-3, 3, 100)
    w = oracles.w_of_omega(om)
    fact = np.prod(w[:, None] - z[None, :], axis=1) / np.prod(w[:, None] - p[None, :], axis=1)
    got = evaluate(d, 1j * om)
    assert np.max(np.abs(got - fact) / np.abs(fact)) <= 1e-8


def test_symmetrize_closes_pairs():
    v = np.array([-1 + 1j, -1 - 1.000001j, -3.0 + 1e-12j])
    out = symmetrize(v)
    assert conjugate_pairing_error(out) == 0.0
    assert np.all(np.abs(out - v) < 1e-5)


def test_no_convergence_is_numeric_error():
    assert issubclass(NoConvergence, ArithmeticError)
