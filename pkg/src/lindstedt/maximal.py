"""Lindstedt series for maximal tori of the dissipative standard-like map.

Unknowns are the zero-mean periodic part ``u(theta) = sum eps^n u_n`` of
the hull ``theta + u(theta)`` and the drift ``mu = sum eps^n mu_n``.  At
order ``n`` the cohomology equation is

    L_w u_n = sum_l alpha_l E^l_{n-1} + mu_n + extra_n,

    extra_3 = -gamma w,   extra_n = gamma (u_{n-3}(. - w) - u_{n-3})  (n >= 4),

and ``mu_n`` is minus the mean of everything else on the right.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from . import numerics as nx
from .cohomology import Frequency, solve_zero_average
from .errors import ConservativeMaximal
from .exprec import extend, init_maximal
from .fourier import (NormParams, Potential, TrigPoly, average, linear_combine,
                      norm, shift)
from .invariance import residual_table

__all__ = ["MaximalModel", "MaximalExpansion", "SolveRecord", "step", "expand", "residual"]


@dataclass
class MaximalModel:
    potential: Potential
    freq: Frequency
    gamma: float
    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be non-negative")
        if self.freq.dim != self.potential.dim:
            raise ValueError("maximal tori need len(omega) == D")
        if self.gamma == 0:
            warnings.warn("gamma = 0: maximal-torus Lindstedt series converge for "
                          "Diophantine omega", ConservativeMaximal, stacklevel=3)

    @property
    def dim(self):
        return self.potential.dim

    def scaled(self, eta):
        """Same model after ``eps -> eta eps``: ``V -> eta V``, ``gamma -> eta^3 gamma``."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConservativeMaximal)
            return MaximalModel(self.potential.scaled(eta), self.freq,
                                self.gamma * eta**3, self.order)


@dataclass
class SolveRecord:
    """One cohomology solve: sizes of the right-hand side and of the solution."""

    n: int
    rhs_degree: int
    rhs_norm: float
    sol_norm: float


@dataclass
class MaximalExpansion:
    model: MaximalModel
    norm_params: NormParams = NormParams()
    u: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    caches: dict = field(default_factory=dict)
    norm_log: list = field(default_factory=list)
    solves: list = field(default_factory=list)

    @property
    def order(self):
        return len(self.u) - 1

    @property
    def series(self):
        return self.u


def _zero_mu(D):
    return nx.as_real_array(np.zeros(D))


def _new_expansion(model, norm_params):
    D = model.dim
    exp = MaximalExpansion(model, norm_params)
    exp.u.append(TrigPoly.zero(D, D))
    exp.mu.append(_zero_mu(D))
    exp.norm_log.append((0, norm(exp.u[0], norm_params), nx.scalar(0)))
    for ell, _ in model.potential.alphas():
        exp.caches[ell] = init_maximal(ell, D)
    return exp


def _real_rhs(total):
    return total.as_real(rtol=1e-10 * nx.tol_scale())


def step(model, expansion):
    """Compute ``(u_n, mu_n)`` for ``n = expansion.order + 1`` without storing them.

    Caches are brought up to layer ``n - 1`` as a side effect.
    """
    n = expansion.order + 1
    D = model.dim
    u = expansion.u
    for cache in expansion.caches.values():
        while len(cache) < n:
            extend(cache, u[1:])
    terms = [(1, expansion.caches[ell][n - 1].times_vector(alpha))
             for ell, alpha in model.potential.alphas()]
    if not terms:
        terms = [(1, TrigPoly.zero(D, D))]
    if n == 3 and model.gamma != 0:
        terms.append((-model.gamma, TrigPoly.constant(nx.as_real_array(list(model.freq.omega)), D)))
    if n >= 4 and model.gamma != 0:
        back = shift(u[n - 3], [-w for w in model.freq.omega])
        terms += [(model.gamma, back), (-model.gamma, u[n - 3])]
    rhs = _real_rhs(linear_combine(terms))
    mu_n = nx.real_part(-average(rhs))
    centered = linear_combine([(1, rhs), (1, TrigPoly.constant(mu_n, D))])
    u_n = solve_zero_average(centered, model.freq, norm_params=expansion.norm_params)
    J = model.potential.degree
    if u_n.attained_degree() > n * J:
        raise RuntimeError(f"degree law violated at order {n}: "
                           f"{u_n.attained_degree()} > {n * J}")
    expansion.solves.append(SolveRecord(
        n, centered.attained_degree(),
        norm(centered, expansion.norm_params), norm(u_n, expansion.norm_params)))
    return u_n, mu_n


def expand(model, norm_params=NormParams(), expansion=None):
    """Run :func:`step` for orders ``1..model.order`` (or continue ``expansion``)."""
    if expansion is None:
        expansion = _new_expansion(model, norm_params)
    while expansion.order < model.order:
        u_n, mu_n = step(model, expansion)
        expansion.u.append(u_n)
        expansion.mu.append(mu_n)
        expansion.norm_log.append((expansion.order, norm(u_n, expansion.norm_params),
                                   nx.sqrt(sum(m * m for m in mu_n))))
    return expansion


def residual(model, expansion, N_trunc, eps_list, norm_params=NormParams(), analytic=False):
    """``[(eps, ||E[u_{<=N}, mu_{<=N}]||)]`` for the truncated series."""
    if N_trunc > expansion.order:
        raise ValueError(f"truncation {N_trunc} beyond computed order {expansion.order}")
    D = model.dim
    winding = np.eye(D, dtype=int).tolist()
    return residual_table(model.potential, model.freq, model.gamma, winding,
                          expansion.u[: N_trunc + 1], expansion.mu[: N_trunc + 1],
                          eps_list, norm_params, analytic=analytic)
