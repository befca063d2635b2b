"""Residual of the torus invariance equation for truncated series.

For a hull ``theta -> W theta + G(theta)`` (``W`` the identity for maximal
tori, the winding column ``k`` for circles in ``T^2``) and a drift ``mu``:

    E[G, mu] = L_w G - eps V'(W theta + G) - mu + gamma eps^3 (G - G(. - w) + W w)

Everything except the composition is formed exactly on Fourier
coefficients.  The composition is sampled on a uniform grid much finer
than the degree of ``G`` and projected back, so aliasing is negligible for
the small ``eps`` used in order-of-vanishing checks.
"""

import numpy as np

from . import numerics as nx
from .cohomology import apply_L
from .fourier import (NormParams, TrigPoly, evaluate_uniform_grid, linear_combine,
                      norm, project_uniform_grid, shift, _index_grids)

__all__ = ["invariance_residual", "residual_table"]


def _sum_series(terms, eps, L, D):
    acc = [(eps**n, t) for n, t in enumerate(terms)]
    if not acc:
        return TrigPoly.zero(L, D)
    return linear_combine(acc)


def _composition_on_grid(potential, winding, G, M):
    """Samples of ``V'(W theta + G(theta))`` on the ``M``-point tensor grid."""
    L = G.domain_dim
    vals = nx.real_part(evaluate_uniform_grid(G, M))
    two_pi = 2 * nx.pi()
    axes = [np.array([two_pi * j / M for j in range(M)], dtype=object if not nx.is_native() else float)]
    theta = np.meshgrid(*(axes * L), indexing="ij")
    x = [sum(winding[d][a] * theta[a] for a in range(L)) + vals[..., d]
         for d in range(potential.dim)]
    out = nx.zeros(vals.shape)
    for ell, alpha in potential.alphas():
        phase = sum(e * xd for e, xd in zip(ell, x))
        out += nx.expj(phase)[..., None] * np.asarray(alpha).reshape((1,) * L + (-1,))
    return out


def invariance_residual(potential, freq, gamma, winding, series, drifts, eps,
                        grid_degree=None):
    """Residual polynomial of the invariance equation at parameter ``eps``.

    Parameters
    ----------
    winding : sequence of sequences
        ``D x L`` integer matrix ``W``.
    series : list of TrigPoly
        ``G_0, G_1, ...`` (on ``T^L`` with values in ``R^D``).
    drifts : list of vectors
        ``mu_0, mu_1, ...``.
    grid_degree : int, optional
        Fourier degree kept after projection.
    """
    L, D = series[0].domain_dim, series[0].range_dim
    eps = nx.scalar(eps)
    G = _sum_series(series, eps, L, D)
    mu = sum((eps**n * nx.as_real_array(np.asarray(m)) for n, m in enumerate(drifts)),
             nx.as_real_array(np.zeros(D)))
    w = list(freq.omega)
    Ww = [sum(winding[d][a] * w[a] for a in range(L)) for d in range(D)]
    g3 = gamma * eps**3
    exact = linear_combine([
        (1, apply_L(G, freq)),
        (g3, G),
        (-g3, shift(G, [-x for x in w])),
        (1, TrigPoly.constant(nx.as_real_array([g3 * c for c in Ww]) - mu, L)),
    ])
    J = max(potential.degree, 1)
    K = grid_degree or max(2 * exact.degree + 4 * J, 16)
    M = 4 * K + 4
    comp = project_uniform_grid(_composition_on_grid(potential, winding, G, M), K)
    return linear_combine([(1, exact), (-eps, comp)])


def residual_table(potential, freq, gamma, winding, series, drifts, eps_list,
                   norm_params=NormParams(), analytic=False):
    """``[(eps, ||E||)]``; the norm has ``rho = 0`` unless ``analytic``."""
    params = norm_params if analytic else NormParams(0.0, norm_params.r)
    rows = []
    for eps in eps_list:
        res = invariance_residual(potential, freq, gamma, winding, series, drifts, eps)
        rows.append((eps, norm(res, params)))
    return rows
