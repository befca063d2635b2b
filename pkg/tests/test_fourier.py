import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lindstedt import numerics as nx
from lindstedt.errors import DimensionMismatch, NormOverflow
from lindstedt.fourier import (NormParams, Potential, TrigPoly, average, convolve_product,
                               derivative, evaluate_grid, evaluate_uniform_grid,
                               linear_combine, norm, project_uniform_grid, shift)

from _strategies import random_poly, seeds


def sin1():
    return TrigPoly.from_dict({(1,): [-0.5j], (-1,): [0.5j]}, 1, 1, real=True)


def cos1():
    return TrigPoly.from_dict({(1,): [0.5], (-1,): [0.5]}, 1, 1, real=True)


def coeff(p, ell, j=0):
    return complex(p.coeff(ell)[j])


# -- storage --------------------------------------------------------------

def test_absent_mode_reads_zero():
    assert coeff(sin1(), 7) == 0


def test_entries_outside_one_norm_ball_rejected():
    c = np.zeros((3, 3, 1), complex)
    c[0, 0] = 1  # l = (-1, -1) has |l| = 2 > 1
    with pytest.raises(ValueError):
        TrigPoly(c)


def test_real_flag_imposes_conjugate_symmetry():
    p = TrigPoly.from_dict({(1,): [1 + 2j], (-1,): [5.0]}, 1, 1, real=True)
    assert coeff(p, 1) == np.conj(coeff(p, -1))


def test_from_dict_dimension_checks():
    with pytest.raises(DimensionMismatch):
        TrigPoly.from_dict({(1, 0): [1]}, 1, 1)
    with pytest.raises(DimensionMismatch):
        TrigPoly.from_dict({(1,): [1, 2]}, 1, 1)


def test_potential_gradient_is_i_l_vhat():
    V = Potential.from_cos_sin(2, [((1, 0), 1, 0), ((1, 1), 0, 2)])
    for ell, alpha in V.alphas():
        vhat = complex(V.vcoeffs.coeff(ell)[0])
        assert np.allclose(alpha, [1j * e * vhat for e in ell], atol=1e-15)
        assert np.allclose(V.gradient.coeff(tuple(-e for e in ell)), np.conj(alpha))
    assert not np.any(V.gradient.coeff((0, 0)))
    assert V.upsilon == pytest.approx(2 * 0.5 + 2 * math.sqrt(2))
    assert V.degree == 2


# -- linear_combine -------------------------------------------------------

def test_linear_combine_cancels():
    p = sin1()
    assert linear_combine([(1, p), (-1, p)]).is_zero()


def test_linear_combine_scales_mode():
    p = TrigPoly.mode(1)
    assert coeff(linear_combine([(2, p)]), 1) == 2


def test_sin_plus_cos_coefficients():
    q = linear_combine([(1, sin1()), (1, cos1())])
    # sin = (e - e^-1)/2i, cos = (e + e^-1)/2
    assert coeff(q, 1) == pytest.approx(1 / 2j + 0.5)
    assert coeff(q, -1) == pytest.approx(-1 / 2j + 0.5)


@given(seeds)
def test_linear_combine_is_linear(seed):
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, 2, 2, 3), random_poly(rng, 2, 2, 5)
    a, b = rng.standard_normal(2)
    r = linear_combine([(a, p), (b, q)])
    pts = rng.uniform(0, 2 * np.pi, (5, 2))
    want = a * evaluate_grid(p, pts) + b * evaluate_grid(q, pts)
    assert np.allclose(evaluate_grid(r, pts), want, atol=1e-12)
    assert r.real


# -- products -------------------------------------------------------------

def test_inverse_modes_multiply_to_one():
    r = convolve_product(TrigPoly.mode(1), TrigPoly.mode(-1))
    assert coeff(r, 0) == 1 and r.attained_degree() == 0


def test_sin_squared():
    r = convolve_product(sin1(), sin1())
    assert coeff(r, 0) == pytest.approx(0.5)
    assert coeff(r, 2) == pytest.approx(-0.25)
    assert coeff(r, -2) == pytest.approx(-0.25)
    assert coeff(r, 1) == 0


def test_product_with_zero():
    assert convolve_product(sin1(), TrigPoly.zero(1, 1)).is_zero()


@given(seeds, st.integers(1, 2))
def test_product_evaluates_pointwise(seed, L):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, L, 1, int(rng.integers(0, 9)))
    q = random_poly(rng, L, 2, int(rng.integers(0, 9)))
    r = convolve_product(p, q)
    pts = rng.uniform(0, 2 * np.pi, (6, L))
    want = evaluate_grid(p, pts) * evaluate_grid(q, pts)
    scale = np.abs(want).max() + 1
    assert np.abs(evaluate_grid(r, pts) - want).max() <= 1e-13 * scale * 10
    assert r.attained_degree() <= p.attained_degree() + q.attained_degree()


def test_product_rejects_vector_left_factor():
    v = TrigPoly.constant([1.0, 2.0], 1)
    with pytest.raises(DimensionMismatch):
        convolve_product(v, sin1())


def test_product_high_precision_matches_binary64():
    rng = np.random.default_rng(3)
    p, q = random_poly(rng, 2, 1, 4), random_poly(rng, 2, 1, 3)
    lo = convolve_product(p, q).coeffs
    with nx.working_precision(120):
        hi = convolve_product(p.converted(), q.converted()).coeffs
    hi = np.vectorize(complex)(hi)
    assert np.allclose(lo, hi, atol=1e-13)


# -- shift, derivative, average -------------------------------------------

def test_shift_by_zero_is_identity():
    p = sin1()
    assert shift(p, [0.0]) is p


def test_shift_half_period_flips_sign():
    assert coeff(shift(TrigPoly.mode(1), [math.pi]), 1) == pytest.approx(-1)


def test_shifted_sine_on_grid():
    w = 2 * math.pi * (math.sqrt(5) - 1) / 2
    th = np.linspace(0, 2 * math.pi, 37)[:, None]
    vals = evaluate_grid(shift(sin1(), [w]), th)[:, 0]
    assert np.abs(vals - np.sin(th[:, 0] + w)).max() <= 1e-14


def test_derivative_of_constant():
    assert derivative(TrigPoly.constant([3.0], 1), 0).is_zero()


def test_derivative_of_sine_is_cosine():
    d = derivative(sin1(), 0)
    assert np.allclose(d.coeffs, cos1().coeffs)


def test_second_derivative_of_cosine():
    d2 = derivative(derivative(cos1(), 0), 0)
    assert np.allclose(d2.coeffs, -cos1().coeffs)


def test_averages():
    assert average(sin1())[0] == 0
    one_plus_cos = linear_combine([(1, TrigPoly.constant([1.0], 1)), (1, cos1())])
    assert average(one_plus_cos)[0] == pytest.approx(1)
    assert average(convolve_product(sin1(), sin1()))[0] == pytest.approx(0.5)


# -- norm -----------------------------------------------------------------

def test_single_mode_norm():
    assert norm(TrigPoly.mode(1), NormParams(1, 1)) == pytest.approx(math.sqrt(2 * math.e**2))


@given(st.floats(0, 3), st.floats(0, 3), st.floats(-5, 5))
def test_constant_norm(rho, r, c):
    assert norm(TrigPoly.constant([c], 2), NormParams(rho, r)) == pytest.approx(abs(c))


@given(seeds, st.floats(0, 2), st.floats(0, 2))
def test_removing_average_does_not_increase_norm(seed, rho, r):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 2, 2, 4)
    centered = linear_combine([(1, p), (-1, TrigPoly.constant(average(p), 2))])
    params = NormParams(rho, r)
    assert norm(centered, params) <= norm(p, params)


def test_norm_overflow_in_binary64():
    p = TrigPoly.mode(40)
    with pytest.raises(NormOverflow):
        norm(p, NormParams(rho=20.0))
    with nx.working_precision(64):
        assert mpmath.isfinite(norm(p.converted(), NormParams(rho=20.0)))


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        NormParams(-1, 0)


def _algebra_constant(r, reach=60):
    # Cauchy-Schwarz: ||pq|| <= C ||p|| ||q|| with
    # C^2 = sup_l sum_j (1+l^2)^r / ((1+j^2)^r (1+(l-j)^2)^r); exp(|l| rho) cancels
    j = np.arange(-reach, reach + 1)
    w = (1.0 + j**2) ** r
    return math.sqrt(max(np.sum(w[i] / (w * (1.0 + (j[i] - j) ** 2) ** r))
                         for i in range(len(j))))


@given(seeds, st.integers(0, 10), st.integers(0, 10))
def test_banach_algebra_inequality(seed, dp, dq):
    params = NormParams(0.5, 1.5)
    C = _algebra_constant(params.r)
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, 1, 1, dp), random_poly(rng, 1, 1, dq)
    assert norm(convolve_product(p, q), params) <= C * norm(p, params) * norm(q, params)


# -- evaluation -----------------------------------------------------------

def test_evaluate_constant_and_mode():
    assert evaluate_grid(TrigPoly.constant([1.0], 1), [[0.3]])[0, 0] == 1
    assert evaluate_grid(TrigPoly.mode(1), [[math.pi / 2]])[0, 0] == pytest.approx(1j)


@given(seeds, st.integers(1, 2))
def test_real_polys_evaluate_real(seed, L):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, L, 2, 5)
    vals = evaluate_grid(p, rng.uniform(0, 7, (8, L)))
    assert np.all(np.abs(vals.imag) <= 1e-12 * (np.abs(vals) + 1))


@given(seeds, st.integers(1, 2))
def test_uniform_grid_round_trip(seed, L):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, L, 2, 6, real=False)
    back = project_uniform_grid(evaluate_uniform_grid(p, 16), 6)
    assert np.allclose(back.coeffs, p.coeffs, atol=1e-12)
