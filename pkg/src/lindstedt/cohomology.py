"""Inverting the second-difference operator ``L_w u = u(. + w) + u(. - w) - 2u``.

``L_w`` is diagonal in Fourier space with multiplier
``m_l = 2 (cos(l.w) - 1) = -4 sin^2(l.w / 2)``; the sine form is used
numerically because it keeps full relative accuracy when ``l.w`` is close
to ``2 pi Z``, which is exactly where it matters.

Frequencies are in radians.  A Diophantine certificate ``(nu, tau)`` on a
:class:`Frequency` asserts

    dist(l . w, 2 pi Z) >= nu |l|^(-tau)      for all l != 0 (probed range),

which gives ``1/|m_l| <= (pi^2/4) nu^-2 |l|^(2 tau)`` and hence the solve
bound ``||A|| <= 4 nu^-2 J^(2 tau) ||B||`` for ``B`` of degree ``J``.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
import math
import warnings

import mpmath
import numpy as np

from . import numerics as nx
from .errors import (CertificateWarning, ExactResonance, NearResonance,
                     NonZeroAverage)
from .fourier import (NormParams, TrigPoly, _index_grids, _one_norms, average,
                      linear_combine, norm, shift)

__all__ = [
    "Frequency",
    "DiophantineProfile",
    "multiplier",
    "divisor_distance",
    "solve_zero_average",
    "apply_L",
    "apply_L_multiplier",
    "diophantine_profile",
]

# distances below this many ulps of |l.w| count as exact resonance
_EXACT_ULPS = 64


@dataclass(frozen=True)
class Frequency:
    """Rotation vector ``omega`` (radians) with an optional certificate."""

    omega: tuple
    certificate: tuple = None
    kind: str = "explicit"

    def __post_init__(self):
        if self.certificate is not None:
            nu, tau = self.certificate
            if not (nu > 0 and tau > 0):
                raise ValueError("certificate needs nu > 0 and tau > 0")

    @property
    def dim(self):
        return len(self.omega)

    @classmethod
    def explicit(cls, values):
        return cls(tuple(nx.scalar(v) for v in np.atleast_1d(values)), kind="explicit")

    @classmethod
    def golden(cls):
        """``2 pi (sqrt 5 - 1)/2`` at working precision."""
        x = (nx.sqrt(nx.scalar(5)) - 1) / 2
        return cls((2 * nx.pi() * x,), kind="golden-mean")

    @classmethod
    def from_continued_fraction(cls, quotients):
        """``2 pi [0; a_1, ..., a_n, 1, 1, 1, ...]`` (a noble rotation number)."""
        tail = (1 + nx.sqrt(nx.scalar(5))) / 2
        x = tail
        for a in reversed([int(a) for a in quotients]):
            if a < 1:
                raise ValueError("partial quotients must be positive integers")
            x = a + 1 / x
        return cls((2 * nx.pi() / x,), kind="continued-fraction")

    @classmethod
    def rational(cls, value):
        """Rational multiples of ``2 pi`` are resonant; always raises."""
        frac = Fraction(str(value))
        raise ExactResonance(
            f"omega = 2 pi * {frac} is resonant at |l| = {frac.denominator}",
            ell=(frac.denominator,))

    def with_certificate(self, nu, tau):
        return replace(self, certificate=(float(nu), float(tau)))

    def as_floats(self):
        return np.array([float(w) for w in self.omega])


def divisor_distance(ell, freq):
    """``dist(l . w, 2 pi Z)`` in binary64."""
    x = float(np.dot(np.atleast_1d(ell), freq.as_floats()))
    return abs(x - 2 * math.pi * round(x / (2 * math.pi)))


def multiplier(ell, freq):
    """``m_l = 2 (cos(l.w) - 1)`` at working precision."""
    ell = [int(x) for x in np.atleast_1d(ell)]
    if len(ell) != freq.dim:
        raise ValueError("index and frequency dimensions differ")
    x = sum((e * w for e, w in zip(ell, freq.omega)), nx.scalar(0))
    if nx.is_native():
        return -4.0 * math.sin(x / 2) ** 2
    return -4 * mpmath.sin(x / 2) ** 2


@lru_cache(maxsize=256)
def _multiplier_grid(omega, L, K, bits):
    with nx.working_precision(bits):
        phase = sum(g * w for g, w in zip(_index_grids(L, K), omega))
        if nx.is_native():
            phase = np.asarray(phase, dtype=float)
            m = -4.0 * np.sin(phase / 2) ** 2
            two_pi = 2 * math.pi
            dist = np.abs(phase - two_pi * np.round(phase / two_pi))
            ulp = np.finfo(float).eps * np.maximum(1.0, np.abs(phase))
        else:
            phase = np.asarray(phase, dtype=object)
            m = np.frompyfunc(lambda x: -4 * mpmath.sin(x / 2) ** 2, 1, 1)(phase).astype(object)
            two_pi = 2 * mpmath.pi
            dist = np.frompyfunc(lambda x: float(abs(x - two_pi * mpmath.nint(x / two_pi))), 1, 1)(phase).astype(float)
            ulp = nx.machine_eps() * np.maximum(1.0, np.abs(phase.astype(float)))
    inside = (_one_norms(L, K) <= K) & (_one_norms(L, K) > 0)
    resonant = inside & (dist <= _EXACT_ULPS * ulp)
    return m, resonant, inside


def _check_resonance(freq, K, L, warn_tol):
    m, resonant, inside = _multiplier_grid(freq.omega, L, K, nx.get_bits())
    if np.any(resonant):
        idx = tuple(int(i) for i in np.argwhere(resonant)[0])
        ell = tuple(i - K for i in idx)
        raise ExactResonance(f"l.omega is in 2 pi Z for l = {ell}", ell=ell)
    mags = np.abs(m[inside].astype(float)) if m.dtype == object else np.abs(m[inside])
    if mags.size and mags.min() < warn_tol:
        warnings.warn(f"small divisor |m_l| = {mags.min():.3e} below {warn_tol:.1e}",
                      NearResonance, stacklevel=3)
    return m, inside


def solve_zero_average(B, freq, zero_tol=None, resonance_warn_tol=None,
                       norm_params=NormParams()):
    """Unique zero-mean ``A`` with ``L_w A = B - mean(B)``.

    Parameters
    ----------
    B : TrigPoly
        Right-hand side on ``T^L`` with ``L == freq.dim``.
    zero_tol : float, optional
        Largest tolerated ``|mean(B)|``; defaults to ``1e-10 ||B||`` scaled
        with the working precision.
    resonance_warn_tol : float, optional
        Emit :class:`NearResonance` when some ``|m_l|`` is smaller
        (default ``1e-8`` scaled with precision).
    norm_params : NormParams
        Norm in which a certificate bound, if any, is checked.

    Raises
    ------
    NonZeroAverage, ExactResonance
    """
    if B.domain_dim != freq.dim:
        raise ValueError("B and omega live on tori of different dimension")
    scale = nx.tol_scale()
    avg = average(B)
    if zero_tol is None:
        zero_tol = 1e-10 * scale * float(norm(B))
    mean_size = max(float(abs(a)) for a in avg)
    if mean_size > zero_tol:
        raise NonZeroAverage(f"|mean(B)| = {mean_size:.3e} exceeds {zero_tol:.3e}")
    if resonance_warn_tol is None:
        resonance_warn_tol = 1e-8 * scale
    K, L = B.degree, B.domain_dim
    m, inside = _check_resonance(freq, K, L, resonance_warn_tol)
    safe = np.where(inside, m, 1)
    coeffs = B.coeffs / safe[..., None]
    coeffs[(K,) * L] = 0
    A = TrigPoly(coeffs, real=B.real)
    if freq.certificate is not None:
        J = B.attained_degree()
        if J > 0:
            nu, tau = freq.certificate
            bound = 4.0 * nu**-2 * J ** (2 * tau)
            lhs, rhs = float(norm(A, norm_params)), float(norm(B, norm_params))
            if lhs > bound * rhs * (1 + 1e-12):
                warnings.warn(f"||A|| = {lhs:.6e} exceeds certified bound {bound * rhs:.6e}",
                              CertificateWarning, stacklevel=2)
    return A


def apply_L(p, freq):
    """``p(. + w) + p(. - w) - 2 p`` via shifts."""
    w = list(freq.omega)
    return linear_combine([(1, shift(p, w)), (1, shift(p, [-x for x in w])), (-2, p)])


def apply_L_multiplier(p, freq):
    """Same operator, applied as the Fourier multiplier ``m_l``."""
    m, _, _ = _multiplier_grid(freq.omega, p.domain_dim, p.degree, nx.get_bits())
    return TrigPoly(p.coeffs * m[..., None], real=p.real)


@dataclass
class DiophantineProfile:
    """Smallest ``dist(l.w, 2 pi Z)`` on each shell ``|l| = q``.

    ``records`` are the shells where the running minimum strictly drops;
    ``tau`` is minus the least-squares slope of ``log d`` against ``log q``
    over the records, and ``nu = min_q d(q) q^tau`` makes the certificate
    hold on every probed shell.
    """

    shells: np.ndarray
    min_distance: np.ndarray
    records: np.ndarray = field(repr=False)
    nu: float = float("nan")
    tau: float = float("nan")

    @property
    def certificate(self):
        return (self.nu, self.tau)

    def table(self):
        return list(zip(self.shells.tolist(), self.min_distance.tolist()))


def _shell_distances(omega, q):
    L = omega.shape[0]
    if L == 1:
        ells = np.array([[q]])
    elif L == 2:
        a = np.arange(-q, q + 1)
        b = q - np.abs(a)
        ells = np.concatenate([np.stack([a, b], 1), np.stack([a, -b], 1)])
    else:
        rng = np.arange(-q, q + 1)
        grid = np.stack(np.meshgrid(*([rng] * L), indexing="ij"), -1).reshape(-1, L)
        ells = grid[np.abs(grid).sum(1) == q]
    x = ells @ omega
    two_pi = 2 * math.pi
    return np.abs(x - two_pi * np.round(x / two_pi)), ells


def diophantine_profile(freq, ell_max):
    """Empirical small-divisor profile and fitted certificate ``(nu, tau)``.

    Raises :class:`ExactResonance` if some ``l.w`` lands on ``2 pi Z``.
    """
    if ell_max < 1:
        raise ValueError("ell_max must be at least 1")
    omega = freq.as_floats()
    shells = np.arange(1, ell_max + 1)
    mins = np.empty(ell_max)
    for i, q in enumerate(shells):
        d, ells = _shell_distances(omega, int(q))
        j = int(np.argmin(d))
        scale = max(1.0, abs(float(ells[j] @ omega)))
        if d[j] <= _EXACT_ULPS * np.finfo(float).eps * scale:
            raise ExactResonance(f"l.omega is in 2 pi Z for l = {tuple(ells[j])}",
                                 ell=tuple(int(x) for x in ells[j]))
        mins[i] = d[j]
    running = np.minimum.accumulate(mins)
    is_record = np.ones(ell_max, dtype=bool)
    is_record[1:] = running[1:] < running[:-1]
    records = shells[is_record]
    if records.size >= 2:
        slope, _ = np.polyfit(np.log(records), np.log(mins[is_record]), 1)
        tau = max(-slope, 1e-12)
    else:
        tau = 1.0
    nu = float(np.min(mins * shells.astype(float) ** tau))
    return DiophantineProfile(shells, mins, records, nu=nu, tau=float(tau))
