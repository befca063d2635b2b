import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindstedt import numerics as nx
from lindstedt.cohomology import Frequency
from lindstedt.errors import DegenerateAverage, NondegeneracyFailure
from lindstedt.fourier import (NormParams, Potential, TrigPoly, average, evaluate_grid,
                               linear_combine, norm, shift)
from lindstedt.lower import (LowerTopology, averaged_forcing, expand_lower, find_beta0,
                             nondegeneracy_constant, residual_lower)

GOLD = Frequency.golden()
W = GOLD.omega[0]
TOPO = LowerTopology((1, 0))


def froeschle():
    return Potential.from_cos_sin(2, [((1, 0), 1, 0), ((0, 1), 1, 0)])


def skewed():
    # not symmetric under q2 -> -q2, so the beta_n are nonzero
    return Potential.from_cos_sin(2, [((1, 0), 1, 0), ((0, 1), 1, 0), ((1, 1), 0, 0.5),
                                      ((1, -2), 0.3, 0), ((0, 2), 0, 0.2)])


# -- topology -------------------------------------------------------------

def test_topology_defaults_and_reduction():
    assert TOPO.k_perp == (0, 1)
    assert LowerTopology((2, 4), (-6, 3)).k_perp == (-2, 1)
    with pytest.raises(ValueError):
        LowerTopology((1, 0), (1, 1))
    with pytest.raises(ValueError):
        LowerTopology((0, 0))


# -- beta0 ----------------------------------------------------------------

def test_averaged_forcing_worked_example():
    phi = averaged_forcing(froeschle(), TOPO)
    b = np.linspace(0, 2 * np.pi, 9)[:, None]
    assert np.allclose(evaluate_grid(phi, b)[:, 0].real, -2 * np.pi * np.sin(b[:, 0]),
                       atol=1e-13)


def test_find_beta0_worked_example():
    roots = find_beta0(froeschle(), TOPO)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(0, abs=1e-12)
    assert roots[1] == pytest.approx(math.pi, abs=1e-12)


def test_no_surviving_modes_is_degenerate():
    V = Potential.from_cos_sin(2, [((1, 0), 1, 0), ((1, 1), 1, 0)])
    with pytest.raises(DegenerateAverage):
        find_beta0(V, TOPO)


@given(st.integers(0, 2**32 - 1))
def test_at_least_two_roots(seed):
    rng = np.random.default_rng(seed)
    terms = [((int(a), int(b)), float(rng.normal()), float(rng.normal()))
             for a, b in rng.integers(-2, 3, (4, 2)) if (a, b) != (0, 0)]
    terms.append(((0, int(rng.integers(1, 3))), 1.0, float(rng.normal())))
    V = Potential.from_cos_sin(2, terms)
    try:
        roots = find_beta0(V, TOPO)
    except DegenerateAverage:
        return
    assert len(roots) >= 2
    phi = averaged_forcing(V, TOPO)
    scale = float(np.abs(phi.coeffs).sum())
    vals = evaluate_grid(phi, np.array(roots)[:, None])[:, 0].real
    assert np.all(np.abs(vals) <= 1e-11 * scale)


def test_touching_root_found():
    # phi(beta) = 2 pi (cos(beta - c) - cos(2 beta - 2 c)): double zero at c
    c = 0.3
    V = Potential.from_cos_sin(2, [((0, 1), -math.sin(c), math.cos(c)),
                                   ((0, 2), 0.5 * math.sin(2 * c), -0.5 * math.cos(2 * c))])
    roots = find_beta0(V, TOPO)
    want = [c, c + 2 * math.pi / 3, c + 4 * math.pi / 3]
    assert len(roots) == 3
    assert np.allclose(roots, want, atol=1e-6)


def test_beta0_polished_at_high_precision():
    with nx.working_precision(200):
        roots = find_beta0(skewed().converted(), TOPO)
        phi = averaged_forcing(skewed().converted(), TOPO)
        vals = [abs(evaluate_grid(phi, [[r]])[0, 0]) for r in roots]
    assert max(vals) < mpmath.mpf(10) ** -50


# -- nondegeneracy --------------------------------------------------------

def test_nondegeneracy_signs():
    assert nondegeneracy_constant(froeschle(), TOPO, 0.0) == pytest.approx(-2 * math.pi, abs=1e-12)
    assert nondegeneracy_constant(froeschle(), TOPO, math.pi) == pytest.approx(2 * math.pi,
                                                                                abs=1e-12)


def test_nondegeneracy_failure():
    V = Potential.from_cos_sin(2, [((1, 0), 1, 0)])
    with pytest.raises(NondegeneracyFailure):
        nondegeneracy_constant(V, TOPO, 0.0)


def test_nondegeneracy_matches_grid_average():
    V = skewed()
    beta0 = find_beta0(V, TOPO)[0]
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    # k_perp . D^2V . k_perp along theta k + beta0 k_perp, by hand
    q1, q2 = th, beta0
    d22 = (-np.cos(q2) - 0.5 * np.sin(q1 + q2) - 1.2 * np.cos(q1 - 2 * q2)
           - 0.8 * np.sin(2 * q2))
    want = 2 * np.pi * np.mean(d22)
    assert nondegeneracy_constant(V, TOPO, beta0) == pytest.approx(want, rel=1e-12)


# -- expansion ------------------------------------------------------------

def test_order_one_worked_example():
    e = expand_lower(froeschle(), GOLD, TOPO, 0.0, 0.0, 1)
    a = 1 / (2 * (math.cos(W) - 1))
    g1 = e.g[1]
    # -sin(theta) * a in the k direction, nothing across
    assert complex(g1.coeff(1)[0]) == pytest.approx(-a * -0.5j, rel=1e-14)
    assert complex(g1.coeff(-1)[0]) == pytest.approx(-a * 0.5j, rel=1e-14)
    assert not np.any(g1.coeffs[..., 1])


def test_mu3_dissipative():
    e = expand_lower(froeschle(), GOLD, TOPO, 0.1, 0.0, 3)
    assert e.mu[3][0] == pytest.approx(0.1 * W, rel=1e-13)
    assert e.mu[3][1] == 0
    assert all(m[0] == 0 and m[1] == 0 for m in e.mu[:3])


@pytest.mark.parametrize("V", [froeschle, skewed])
def test_conservative_k_average_vanishes(V):
    V = V()
    e = expand_lower(V, GOLD, TOPO, 0.0, find_beta0(V, TOPO)[0], 20)
    gmax = max(float(norm(g)) for g in e.g)
    for n, k_mean, _ in e.k_average_log:
        assert k_mean <= 1e-10 * float(V.upsilon) * gmax
    assert all(np.all(m == 0) for m in e.mu)


@pytest.mark.parametrize("gamma", [0.0, 0.1])
def test_invariants(gamma):
    V = skewed()
    e = expand_lower(V, GOLD, TOPO, gamma, find_beta0(V, TOPO)[1], 15)
    for n, g in enumerate(e.g):
        assert np.dot(average(g).real, TOPO.k) == 0
        assert g.attained_degree() <= n * 2
        assert g.real
        # the constant across k is beta_n
        assert np.dot(average(g).real, TOPO.k_perp) == pytest.approx(float(e.beta[n]))
    assert any(abs(b) > 1e-4 for b in e.beta[1:-1])
    assert e.beta[-1] == 0


def test_nonunit_winding_degree_bound():
    topo = LowerTopology((1, 1))
    V = Potential.from_cos_sin(2, [((1, -1), 1, 0), ((1, 0), 0.5, 0), ((0, 1), 0.5, 0)])
    roots = find_beta0(V, topo)
    e = expand_lower(V, GOLD, topo, 0.1, roots[0], 8)
    assert all(g.attained_degree() <= n for n, g in enumerate(e.g))


def test_both_branches_expand():
    for b in find_beta0(froeschle(), TOPO):
        e = expand_lower(froeschle(), GOLD, TOPO, 0.0, b, 30)
        assert e.order == 30


def test_rejects_degenerate_branch():
    V = Potential.from_cos_sin(2, [((1, 0), 1, 0)])
    with pytest.raises(NondegeneracyFailure):
        expand_lower(V, GOLD, TOPO, 0.0, 0.0, 3)


# -- residual -------------------------------------------------------------

def test_residual_zero_eps():
    e = expand_lower(froeschle(), GOLD, TOPO, 0.1, 0.0, 3)
    assert residual_lower(froeschle(), GOLD, TOPO, 0.1, e, 3, [0.0])[0][1] == 0


@pytest.mark.parametrize("gamma", ["0", "0.1"])
def test_residual_slopes_skewed(gamma):
    with nx.working_precision(200):
        V = skewed().converted()
        g = mpmath.mpf(gamma)
        f = Frequency.golden()
        e = expand_lower(V, f, TOPO, g, find_beta0(V, TOPO)[0], 4)
        eps = [mpmath.mpf(x) for x in ("1e-2", "3e-3", "1e-3", "3e-4")]
        tab = residual_lower(V, f, TOPO, g, e, 4, eps)
    x = np.log([float(a) for a, _ in tab])
    y = np.array([nx.log_abs(r) for _, r in tab])
    assert abs(np.polyfit(x, y, 1)[0] - 5) <= 0.1


def test_residual_translation_covariance():
    # (g, mu) -> (g(. + s) + s k, mu) moves the residual by s; with s a multiple
    # of the sampling step the grid is permuted, so norms agree to roundoff
    V = skewed()
    e = expand_lower(V, GOLD, TOPO, 0.1, find_beta0(V, TOPO)[0], 5)
    params = NormParams(0.0, 0.0)
    base = residual_lower(V, GOLD, TOPO, 0.1, e, 5, [0.05], params)[0][1]
    from lindstedt.invariance import invariance_residual
    s = 2 * math.pi * 3 / 136
    moved = [linear_combine([(1, shift(e.g[0], [s])), (1, TrigPoly.constant(
        [s * TOPO.k[0], s * TOPO.k[1]], 1, real=True))])]
    moved += [shift(g, [s]) for g in e.g[1:6]]
    res = invariance_residual(V, GOLD, 0.1, TOPO.winding, moved, e.mu[:6], 0.05)
    assert float(norm(res, params)) == pytest.approx(float(base), rel=1e-10)
