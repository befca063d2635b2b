"""Quantitative checks on computed series.

Gevrey fits of coefficient growth, the binomial sums that control Cauchy
products of Gevrey sequences, the three inequalities of the inductive
bound together with a bisection over the scale ``eta``, rescaling of
computed series, residual-order fits and degree audits.  Everything here
is a pure function of its inputs.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy.special import gammaln

from . import numerics as nx
from .errors import InsufficientData
from .exprec import ExpCache
from .fourier import NormParams, TrigPoly, convolve_product, linear_combine, norm
from .lower import LowerExpansion
from .maximal import MaximalExpansion

__all__ = [
    "GevreyFit",
    "gevrey_fit",
    "gamma_sigma",
    "gamma_sigma_profile",
    "ProductCheck",
    "product_bound_check",
    "InductiveReport",
    "check_inductive_conditions",
    "bisect_scaling",
    "inductive_constants",
    "scale_series",
    "residual_order_fit",
    "DegreeReport",
    "degree_audit",
]


# -- Gevrey fits ------------------------------------------------------------

@dataclass
class GevreyFit:
    """``log ||u_n|| ~ log A + n log R + sigma log n!`` on ``fit_window``.

    ``sigma_stirling`` refits with ``n log n`` in place of ``log n!`` as a
    cross-check; ``skipped`` lists orders left out for having zero norm.
    """

    A: float
    R: float
    sigma: float
    fit_window: tuple
    residual_rms: float
    skipped: list = field(default_factory=list)
    sigma_stirling: float = float("nan")

    def log_bound(self, n):
        return math.log(self.A) + n * math.log(self.R) + self.sigma * math.lgamma(n + 1)

    def bound(self, n):
        """``A R^n (n!)^sigma``."""
        return math.exp(self.log_bound(n))

    def inflated(self, factor=0.1):
        """Same fit with ``A``, ``R`` and ``sigma`` each multiplied by ``1 + factor``."""
        k = 1 + factor
        return replace(self, A=self.A * k, R=self.R * k, sigma=self.sigma * k)

    def dominates(self, norm_log, window):
        """Orders in ``window`` (inclusive) where ``||u_n||`` exceeds the bound."""
        lo, hi = window
        return [n for n, v in _pairs(norm_log)
                if lo <= n <= hi and v != 0 and nx.log_abs(v) > self.log_bound(n)]


def _pairs(norm_log):
    return [(int(row[0]), row[1]) for row in norm_log]


def gevrey_fit(norm_log, window):
    """Least-squares Gevrey fit over the design ``(1, n, log n!)``.

    Parameters
    ----------
    norm_log : sequence
        Rows ``(n, ||u_n||, ...)``; extra columns are ignored.
    window : (int, int)
        Inclusive order range, ``n_lo >= 3``.

    Raises
    ------
    InsufficientData
        Fewer than four nonzero norms inside the window.
    """
    lo, hi = (int(x) for x in window)
    if lo < 3:
        raise ValueError("fit window must start at n >= 3")
    if hi < lo:
        raise ValueError("empty fit window")
    ns, ys, skipped = [], [], []
    for n, v in _pairs(norm_log):
        if lo <= n <= hi:
            if v == 0:
                skipped.append(n)
            else:
                ns.append(n)
                ys.append(nx.log_abs(v))
    if len(ns) < 4:
        raise InsufficientData(f"{len(ns)} nonzero norms in window {window}, need 4")
    n = np.array(ns, dtype=float)
    y = np.array(ys)
    X = np.stack([np.ones_like(n), n, gammaln(n + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    Xs = np.stack([np.ones_like(n), n, n * np.log(n)], axis=1)
    coef_s, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    return GevreyFit(A=float(np.exp(coef[0])), R=float(np.exp(coef[1])), sigma=float(coef[2]),
                     fit_window=(lo, hi), residual_rms=rms, skipped=skipped,
                     sigma_stirling=float(coef_s[2]))


# -- binomial sums ----------------------------------------------------------

@lru_cache(maxsize=64)
def _profile(sigma, n_max):
    lg = gammaln(np.arange(n_max + 1) + 1.0)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        j = np.arange(n + 1)
        log_binom = lg[n] - lg[j] - lg[n - j]
        out[n] = np.sum(np.exp(-sigma * log_binom))
    out.flags.writeable = False
    return out


def gamma_sigma_profile(sigma, n_max):
    """``[sum_j C(n, j)^(-sigma) for n in 0..n_max]``, summed in log space."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    return _profile(float(sigma), int(n_max))


def gamma_sigma(sigma, n_max=10_000, with_argmax=False):
    """``max_{n <= n_max} sum_j C(n, j)^(-sigma)``; optionally also the maximizing ``n``."""
    prof = gamma_sigma_profile(sigma, n_max)
    n = int(np.argmax(prof))
    return (float(prof[n]), n) if with_argmax else float(prof[n])


# -- Cauchy products --------------------------------------------------------

@dataclass
class ProductCheck:
    """Outcome of :func:`product_bound_check`; truthy when the bound holds."""

    ok: bool
    violating_n: int = None
    ratios: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _size(x, params):
    return norm(x, params) if isinstance(x, TrigPoly) else abs(x)


def _times(a, b):
    if isinstance(a, TrigPoly):
        return convolve_product(a, b)
    return a * b


def _add(terms):
    if isinstance(terms[0], TrigPoly):
        return linear_combine([(1, t) for t in terms])
    return sum(terms)


def product_bound_check(u_seq, v_seq, sigma, A, B, params=NormParams(), gamma_value=None):
    """Check ``||sum_j u_{n-j} v_j|| <= Gamma_sigma A B (n!)^sigma`` for every ``n``.

    ``u_seq`` and ``v_seq`` hold numbers or scalar-valued :class:`TrigPoly`
    coefficients of equal length.  The returned :class:`ProductCheck`
    records the first violating ``n`` and the ratios of each side.
    """
    if len(u_seq) != len(v_seq):
        raise ValueError("sequences must have equal length")
    if not len(u_seq):
        return ProductCheck(True)
    G = gamma_value if gamma_value is not None else gamma_sigma(sigma, max(len(u_seq), 10))
    ratios = []
    for n in range(len(u_seq)):
        prod = _add([_times(u_seq[n - j], v_seq[j]) for j in range(n + 1)])
        lhs = float(_size(prod, params))
        log_rhs = math.log(G * A * B) + sigma * math.lgamma(n + 1)
        ratio = 0.0 if lhs == 0 else math.exp(math.log(lhs) - log_rhs)
        ratios.append(ratio)
        if ratio > 1 + 1e-12:
            return ProductCheck(False, n, ratios)
    return ProductCheck(True, None, ratios)


# -- inductive bounds -------------------------------------------------------

KINDS = ("maximal", "lower-dissipative", "lower-conservative")


@dataclass
class InductiveReport:
    """Per-inequality ``(name, lhs, rhs, passed)`` rows and the overall verdict."""

    kind: str
    rows: list
    gamma_sigma: float

    @property
    def passed(self):
        return all(r[3] for r in self.rows)

    def table(self):
        return "\n".join(f"{name:<28} {lhs:.6e} <= {rhs:.6e}  {'pass' if ok else 'FAIL'}"
                         for name, lhs, rhs, ok in self.rows)


def _solve_factor(tau, nu, J):
    return 4.0 * nu**-2 * J ** (2 * tau)


def check_inductive_conditions(kind, A, B, sigma, tau, nu, J, upsilon, gamma=0.0,
                               n_max=10_000):
    """Evaluate ``2 tau < sigma``, ``J Gamma_sigma A B <= A`` and the solve bound.

    The third inequality is ``4 nu^-2 J^(2 tau) (Upsilon A + 2 gamma B) <= B``
    for ``maximal`` and ``lower-dissipative``; ``lower-conservative`` drops the
    ``gamma`` term.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    G = gamma_sigma(sigma, n_max) if sigma > 0 else float("inf")
    rows = [("2 tau < sigma", 2 * tau, sigma, 2 * tau < sigma)]
    lhs = J * G * A * B
    rows.append(("J Gamma A B <= A", lhs, A, lhs <= A))
    drift = 0.0 if kind == "lower-conservative" else 2 * gamma * B
    lhs = _solve_factor(tau, nu, J) * (upsilon * A + drift)
    rows.append(("4 nu^-2 J^2tau (...) <= B", lhs, B, lhs <= B))
    return InductiveReport(kind, rows, G)


def inductive_constants(J, tau, params, margin=0.01, n_max=10_000):
    """A choice ``(A, B, sigma)`` meeting the first two inequalities.

    ``sigma = 2 tau + 1/2``; ``A`` slightly exceeds the weight
    ``exp(J rho) (1 + J^2)^(r/2)`` of a degree-``J`` exponential; ``B``
    sits just under ``1 / (J Gamma_sigma)``.
    """
    sigma = 2 * tau + 0.5
    A = (1 + margin) * math.exp(J * params.rho) * (1 + J * J) ** (params.r / 2)
    B = (1 - margin) / (J * gamma_sigma(sigma, n_max))
    return A, B, sigma


def bisect_scaling(kind, A, B, sigma, tau, nu, J, upsilon, gamma=0.0, eta_hi=1.0,
                   rel_tol=1e-10, n_max=10_000):
    """Largest ``eta <= eta_hi`` (to ``rel_tol``) at which the scaled data pass.

    Scaling maps ``Upsilon -> eta Upsilon`` and ``gamma -> eta^3 gamma``; the
    third inequality is monotone in ``eta`` and the first two do not depend
    on it.  Returns ``(eta, report)``, or ``(None, report)`` when no scale
    helps.
    """
    def report(eta):
        return check_inductive_conditions(kind, A, B, sigma, tau, nu, J,
                                          eta * upsilon, eta**3 * gamma, n_max)

    top = report(eta_hi)
    if top.passed:
        return eta_hi, top
    if not all(r[3] for r in top.rows[:2]):
        return None, top
    lo, hi = 0.0, eta_hi
    while hi - lo > rel_tol * hi:
        mid = (lo + hi) / 2
        if report(mid).passed:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        return None, top
    return lo, report(lo)


# -- rescaling --------------------------------------------------------------

def _scale_poly(p, factor):
    return linear_combine([(factor, p)])


def _scale_cache(cache, eta):
    layers = [_scale_poly(layer, eta**n) for n, layer in enumerate(cache.layers)]
    out = ExpCache(cache.ell, layers[0], cache.variant)
    out.layers = layers
    return out


def scale_series(expansion, eta):
    """Expansion in the parameter ``eta eps``: order ``n`` is multiplied by ``eta^n``.

    The model is replaced by its scaled companion (``Upsilon -> eta Upsilon``,
    ``gamma -> eta^3 gamma``), so the result can be extended further.  For
    circles ``beta0`` and ``g_0`` are unchanged.
    """
    eta = nx.scalar(eta)
    params = expansion.norm_params
    caches = {ell: _scale_cache(c, eta) for ell, c in expansion.caches.items()}
    if isinstance(expansion, MaximalExpansion):
        out = MaximalExpansion(expansion.model.scaled(eta), params)
        out.u = [_scale_poly(p, eta**n) for n, p in enumerate(expansion.u)]
        out.mu = [m * eta**n for n, m in enumerate(expansion.mu)]
        out.caches = caches
        series = out.u
    elif isinstance(expansion, LowerExpansion):
        out = LowerExpansion(expansion.model.scaled(eta), params,
                             chosen_beta0=expansion.chosen_beta0,
                             nondeg_constant=expansion.nondeg_constant * eta)
        out.g = [_scale_poly(p, eta**n) for n, p in enumerate(expansion.g)]
        out.mu = [m * eta**n for n, m in enumerate(expansion.mu)]
        out.beta = [b * eta**n for n, b in enumerate(expansion.beta)]
        out.caches = caches
        series = out.g
    else:
        raise TypeError("expected a maximal or lower expansion")
    out.norm_log = [(n, norm(p, params), nx.sqrt(sum(x * x for x in out.mu[n])))
                    for n, p in enumerate(series)]
    return out


# -- residual order ---------------------------------------------------------

def residual_order_fit(table):
    """Least-squares slope of ``log residual`` against ``log eps``.

    Raises
    ------
    InsufficientData
        Fewer than three positive rows or ``eps`` spanning less than a decade.
    """
    rows = [(float(e), r) for e, r in table if e > 0 and r > 0]
    if len(rows) < 3:
        raise InsufficientData("need at least three positive (eps, residual) pairs")
    eps = np.array([e for e, _ in rows])
    if eps.max() / eps.min() < 10 * (1 - 1e-12):
        raise InsufficientData("eps values must span at least one decade")
    y = np.array([nx.log_abs(r) for _, r in rows])
    slope, _ = np.polyfit(np.log(eps), y, 1)
    return float(slope)


# -- degree audit -----------------------------------------------------------

@dataclass
class DegreeReport:
    """Attained degree of each order against the bound ``n J``."""

    degrees: list
    bounds: list
    failures: list

    @property
    def ok(self):
        return not self.failures


def degree_audit(expansion, J):
    series = expansion.series
    degrees = [p.attained_degree() for p in series]
    bounds = [n * J for n in range(len(series))]
    failures = [n for n, (d, b) in enumerate(zip(degrees, bounds)) if d > b]
    return DegreeReport(degrees, bounds, failures)
