"""Lindstedt series for invariant circles of a map on ``T^2 x R^2``.

The hull is ``h(theta) = theta k + g(theta)`` with ``k`` an integer
winding vector, so ``h(theta + 2 pi) = h(theta) + 2 pi k``.  The order-``n``
equation reads

    L_w g_n = R_n + mu_n + extra_n,    R_n = sum_l alpha_l F^l_{n-1},

with ``F^l`` the expansion of ``exp(i l . h)`` and ``extra_n`` as for
maximal tori (``-gamma w k`` at ``n = 3``).  The two averages of the
right-hand side are handled separately:

* along ``k`` the drift ``mu_n`` removes it when ``gamma != 0``; when
  ``gamma == 0`` it vanishes by itself and ``mu = 0``;
* along ``k_perp`` it is affine in the free constant ``beta_{n-1}`` of
  ``g_{n-1}`` and is zeroed by choosing that constant.

``g_0 = beta0 k_perp`` with ``beta0`` a zero of the averaged forcing.
"""

from dataclasses import dataclass, field
import math

import mpmath
import numpy as np
from scipy import optimize

from . import numerics as nx
from .cohomology import Frequency, solve_zero_average
from .errors import DegenerateAverage, NondegeneracyFailure
from .exprec import extend, init_lower, peek
from .fourier import (NormParams, Potential, TrigPoly, average, linear_combine,
                      norm, shift)
from .invariance import residual_table

__all__ = [
    "LowerTopology",
    "LowerModel",
    "LowerExpansion",
    "averaged_forcing",
    "find_beta0",
    "nondegeneracy_constant",
    "expand_lower",
    "residual_lower",
]


@dataclass(frozen=True)
class LowerTopology:
    """Winding vector ``k`` and the transverse direction ``k_perp``.

    ``k_perp`` defaults to ``(-k2, k1)`` and is always divided by the gcd of
    its entries.
    """

    k: tuple
    k_perp: tuple = None

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        if len(k) != 2:
            raise ValueError("k must be an integer 2-vector")
        if k == (0, 0):
            raise ValueError("k must be nonzero")
        kp = (-k[1], k[0]) if self.k_perp is None else tuple(int(x) for x in self.k_perp)
        if len(kp) != 2 or kp == (0, 0):
            raise ValueError("k_perp must be a nonzero integer 2-vector")
        if k[0] * kp[0] + k[1] * kp[1] != 0:
            raise ValueError(f"k = {k} and k_perp = {kp} are not orthogonal")
        d = math.gcd(*kp)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k_perp", (kp[0] // d, kp[1] // d))

    @classmethod
    def from_k(cls, k):
        return cls(tuple(k))

    @property
    def winding(self):
        """``D x L`` matrix of the hull's linear part."""
        return [[self.k[0]], [self.k[1]]]

    def along(self, ell):
        return ell[0] * self.k[0] + ell[1] * self.k[1]

    def across(self, ell):
        return ell[0] * self.k_perp[0] + ell[1] * self.k_perp[1]


def _check_dims(potential, freq=None):
    if potential.dim != 2:
        raise ValueError("circles in T^2 need a potential on T^2")
    if freq is not None and freq.dim != 1:
        raise ValueError("circles need a single frequency")


def _survivors(potential, topology):
    """``(l, Vhat_l)`` with ``l . k = 0`` and ``l . k_perp != 0``."""
    out = []
    for ell, v in potential.vcoeffs.items():
        if topology.along(ell) == 0 and topology.across(ell) != 0:
            out.append((ell, v[0]))
    return out


def averaged_forcing(potential, topology):
    """``phi(beta) = int_0^{2pi} k_perp . V'(theta k + beta k_perp) dtheta``.

    Returned as a real trigonometric polynomial in ``beta`` (``L = D = 1``).
    Only modes with ``l . k = 0`` survive the average; their ``beta``
    frequency is ``l . k_perp``.
    """
    _check_dims(potential)
    two_pi = 2 * nx.pi()
    coeffs = {}
    for ell, v in _survivors(potential, topology):
        m = topology.across(ell)
        coeffs[(m,)] = coeffs.get((m,), 0) + two_pi * 1j * m * v
    if not coeffs:
        return TrigPoly.zero(1, 1)
    return TrigPoly.from_dict(coeffs, 1, 1, real=True)


def _as_function(poly):
    """Real binary64 callable ``beta -> poly(beta)`` and its coefficient scale."""
    items = [(e[0], complex(c[0])) for e, c in poly.items()]

    def f(beta):
        return sum((c * np.exp(1j * m * beta) for m, c in items), 0j).real

    scale = sum(abs(c) for _, c in items)
    return f, scale


def _polish(poly, beta):
    """Refine a binary64 root at working precision."""
    if nx.is_native():
        return beta
    items = [(e[0], c[0]) for e, c in poly.items()]

    def f(b):
        return mpmath.re(sum(c * mpmath.expj(m * b) for m, c in items))

    return mpmath.findroot(f, mpmath.mpf(beta), solver="secant", tol=mpmath.eps * 16)


def _scan_roots(f, scale, M, xtol):
    two_pi = 2 * math.pi
    grid = np.linspace(0.0, two_pi, M + 1)
    vals = np.array([f(b) for b in grid])
    zero = 1e-14 * scale
    roots = [float(b) for b, v in zip(grid[:-1], vals[:-1]) if abs(v) <= zero]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if abs(fa) <= zero or abs(fb) <= zero:
            continue
        if fa * fb < 0:
            roots.append(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))
    return roots


def _dedup(roots, tol):
    two_pi = 2 * math.pi
    out = []
    for r in sorted(x % two_pi for x in roots):
        if two_pi - r < tol:
            r = 0.0
        if not any(min(abs(r - s), two_pi - abs(r - s)) < tol for s in out):
            out.append(r)
    return sorted(out)


def find_beta0(potential, topology, scan_points=None):
    """All zeros in ``[0, 2 pi)`` of the averaged forcing :func:`averaged_forcing`.

    Sign changes on a uniform scan are refined with Brent's method to
    ``1e-13``; touching zeros are found as zeros of the derivative where the
    function itself vanishes.  Roots are sorted and, above binary64, polished
    at working precision.

    Raises
    ------
    DegenerateAverage
        If the averaged forcing vanishes identically.
    """
    phi = averaged_forcing(potential, topology)
    if phi.is_zero():
        raise DegenerateAverage(
            "averaged forcing vanishes identically; every beta0 solves order 1")
    J = phi.attained_degree()
    if scan_points is None:
        scan_points = max(4 * J + 4, 64)
    if scan_points < 4 * J + 4:
        raise ValueError(f"scan_points must be at least {4 * J + 4}")
    f, scale = _as_function(phi)
    roots = _scan_roots(f, scale, scan_points, 1e-13)
    dphi = TrigPoly(phi.coeffs * (1j * np.arange(-phi.degree, phi.degree + 1))[:, None],
                    real=True)
    df, dscale = _as_function(dphi)
    for r in _scan_roots(df, dscale, scan_points, 1e-13):
        if abs(f(r)) <= 1e-12 * scale:
            roots.append(r)
    roots = _dedup(roots, 1e-9)
    return [_polish(phi, r) for r in roots] if not nx.is_native() else roots


def nondegeneracy_constant(potential, topology, beta0, nondeg_tol=None):
    """``c = int_0^{2pi} k_perp . D^2V(theta k + beta0 k_perp) k_perp dtheta``.

    Raises
    ------
    NondegeneracyFailure
        If ``|c| < nondeg_tol`` (default ``1e-10 Upsilon`` scaled with the
        working precision).
    """
    _check_dims(potential)
    if nondeg_tol is None:
        nondeg_tol = 1e-10 * float(potential.upsilon) * nx.tol_scale()
    beta0 = nx.scalar(beta0)
    # second derivative along k_perp, then the theta-average keeps l . k = 0
    total = 0
    for ell, v in _survivors(potential, topology):
        m = topology.across(ell)
        total += -(m * m) * v * nx.expj(m * beta0)
    c = nx.scalar(0) + (2 * nx.pi() * total).real
    if abs(c) < nondeg_tol or c == 0:
        raise NondegeneracyFailure(
            f"nondegeneracy constant {float(c):.3e} below tolerance {nondeg_tol:.1e}")
    return c


@dataclass
class LowerModel:
    potential: Potential
    freq: Frequency
    topology: LowerTopology
    gamma: float
    beta0: float
    order: int
    nondeg_tol: float = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be non-negative")
        _check_dims(self.potential, self.freq)
        if self.nondeg_tol is None:
            self.nondeg_tol = 1e-10 * float(self.potential.upsilon) * nx.tol_scale()

    @property
    def degree_bound(self):
        """Largest ``|l . k|`` over the gradient modes: ``deg g_n`` is at most ``n`` times this."""
        return max((abs(self.topology.along(e)) for e, _ in self.potential.alphas()), default=0)

    def scaled(self, eta):
        """Same model after ``eps -> eta eps``; ``beta0`` is unchanged."""
        return LowerModel(self.potential.scaled(eta), self.freq, self.topology,
                          self.gamma * eta**3, self.beta0, self.order,
                          None if self.nondeg_tol is None else self.nondeg_tol * eta)


@dataclass
class LowerExpansion:
    """Coefficients ``g_n``, drifts ``mu_n`` and transverse constants ``beta_n``.

    ``beta[n]`` is the ``k_perp`` constant of ``g_n``; it is fixed while
    solving order ``n + 1``, so the last entry is provisional (zero).
    ``k_average_log`` holds ``(n, |k . mean R_n|, ||R_n||)``.
    """

    model: LowerModel
    norm_params: NormParams = NormParams()
    g: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    chosen_beta0: float = 0.0
    nondeg_constant: float = 0.0
    caches: dict = field(default_factory=dict)
    norm_log: list = field(default_factory=list)
    solves: list = field(default_factory=list)
    k_average_log: list = field(default_factory=list)
    slopes: list = field(default_factory=list)

    @property
    def order(self):
        return len(self.g) - 1

    @property
    def series(self):
        return self.g


def _kp_vec(topology):
    return nx.as_real_array(list(topology.k_perp))


def _k_vec(topology):
    return nx.as_real_array(list(topology.k))


def _norm_entry(exp, n):
    mu = exp.mu[n]
    return (n, norm(exp.g[n], exp.norm_params), nx.sqrt(sum(m * m for m in mu)))


def _new_expansion(model, norm_params):
    topo = model.topology
    c = nondegeneracy_constant(model.potential, topo, model.beta0, model.nondeg_tol)
    beta0 = nx.scalar(model.beta0)
    g0 = TrigPoly.constant(_kp_vec(topo) * beta0, 1, real=True)
    exp = LowerExpansion(model, norm_params, chosen_beta0=beta0, nondeg_constant=c)
    exp.g.append(g0)
    exp.mu.append(nx.as_real_array(np.zeros(2)))
    exp.beta.append(beta0)
    exp.norm_log.append(_norm_entry(exp, 0))
    for ell, _ in model.potential.alphas():
        exp.caches[ell] = init_lower(ell, topo.k, [beta0 * x for x in topo.k_perp])
    return exp


def _forcing(model, layers):
    """``R_n = sum_l alpha_l F^l_{n-1}`` from the supplied layers."""
    terms = [(1, layers[ell].times_vector(alpha)) for ell, alpha in model.potential.alphas()]
    if not terms:
        return TrigPoly.zero(1, 2)
    return linear_combine(terms).as_real(rtol=1e-10 * nx.tol_scale())


def _extras(model, g, n):
    gamma = model.gamma
    if gamma == 0 or n < 3:
        return []
    if n == 3:
        w = model.freq.omega[0]
        return [(-gamma, TrigPoly.constant(_k_vec(model.topology) * w, 1, real=True))]
    back = shift(g[n - 3], [-model.freq.omega[0]])
    return [(gamma, back), (-gamma, g[n - 3])]


def _transverse_mean(model, R, extras):
    total = linear_combine([(1, R)] + extras)
    return nx.real_part(np.dot(average(total), _kp_vec(model.topology)))


def _fix_beta(model, expansion, n):
    """Choose the ``k_perp`` constant of ``g_{n-1}`` so order ``n`` is solvable."""
    g = expansion.g
    topo = model.topology
    extras = _extras(model, g, n)
    base = g[n - 1]
    values = []
    for trial in (0, 1):
        moved = linear_combine([(1, base), (1, TrigPoly.constant(_kp_vec(topo) * trial, 1,
                                                                  real=True))])
        series = g[1:n - 1] + [moved]
        layers = {ell: peek(cache, series) for ell, cache in expansion.caches.items()}
        values.append(_transverse_mean(model, _forcing(model, layers), extras))
    f0, f1 = values
    slope = f1 - f0
    expansion.slopes.append((n, slope))
    if abs(2 * nx.pi() * slope) < model.nondeg_tol:
        raise NondegeneracyFailure(
            f"order {n}: transverse average does not depend on beta_{n - 1} "
            f"(slope {float(slope):.3e})")
    beta = -f0 / slope
    g[n - 1] = linear_combine([(1, base), (1, TrigPoly.constant(_kp_vec(topo) * beta, 1,
                                                                 real=True))])
    expansion.beta[n - 1] = beta
    expansion.norm_log[n - 1] = _norm_entry(expansion, n - 1)


def step(model, expansion):
    """Fix ``beta_{n-1}`` in place and return ``(g_n, mu_n)`` for the next ``n``."""
    n = expansion.order + 1
    g = expansion.g
    if n >= 2:
        _fix_beta(model, expansion, n)
    for cache in expansion.caches.values():
        while len(cache) < n:
            extend(cache, g[1:])
    layers = {ell: cache[n - 1] for ell, cache in expansion.caches.items()}
    R = _forcing(model, layers)
    k = _k_vec(model.topology)
    k_mean = nx.real_part(np.dot(average(R), k))
    expansion.k_average_log.append((n, abs(k_mean), norm(R)))
    rhs = linear_combine([(1, R)] + _extras(model, g, n))
    if model.gamma != 0:
        along = nx.real_part(np.dot(average(rhs), k)) / sum(x * x for x in k)
        mu_n = -along * k
    else:
        mu_n = nx.as_real_array(np.zeros(2))
    centered = linear_combine([(1, rhs), (1, TrigPoly.constant(mu_n, 1, real=True))])
    g_n = solve_zero_average(centered, model.freq, norm_params=expansion.norm_params)
    bound = n * model.degree_bound
    if g_n.attained_degree() > bound:
        raise RuntimeError(f"degree law violated at order {n}: "
                           f"{g_n.attained_degree()} > {bound}")
    expansion.solves.append((n, centered.attained_degree(),
                             norm(centered, expansion.norm_params),
                             norm(g_n, expansion.norm_params)))
    return g_n, mu_n


def expand_model(model, norm_params=NormParams(), expansion=None):
    """Run :func:`step` for orders ``1..model.order`` (or continue ``expansion``)."""
    if expansion is None:
        expansion = _new_expansion(model, norm_params)
    while expansion.order < model.order:
        g_n, mu_n = step(model, expansion)
        expansion.g.append(g_n)
        expansion.mu.append(mu_n)
        expansion.beta.append(nx.scalar(0))
        expansion.norm_log.append(_norm_entry(expansion, expansion.order))
    return expansion


def expand_lower(potential, freq, topology, gamma, beta0, N, norm_params=NormParams(),
                 nondeg_tol=None):
    """Expand the circle with winding ``k`` through order ``N`` from the branch ``beta0``.

    Raises
    ------
    NondegeneracyFailure
        If ``beta0`` fails the nondegeneracy test or some affine
        ``beta``-equation has vanishing slope.
    """
    model = LowerModel(potential, freq, topology, gamma, beta0, N, nondeg_tol)
    return expand_model(model, norm_params)


def residual_lower(potential, freq, topology, gamma, expansion, N_trunc, eps_list,
                   norm_params=NormParams(), analytic=False):
    """``[(eps, ||E[g_{<=N}, mu_{<=N}]||)]`` for the hull ``theta k + g``."""
    if N_trunc > expansion.order:
        raise ValueError(f"truncation {N_trunc} beyond computed order {expansion.order}")
    return residual_table(potential, freq, gamma, topology.winding,
                          expansion.g[: N_trunc + 1], expansion.mu[: N_trunc + 1],
                          eps_list, norm_params, analytic=analytic)
