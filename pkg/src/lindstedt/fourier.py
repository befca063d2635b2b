"""Vector-valued trigonometric polynomials on the torus.

A :class:`TrigPoly` stores the Fourier coefficients of

    p(theta) = sum_{|l| <= K} c_l exp(i l . theta),   theta in T^L,  c_l in C^D

as a dense array of shape ``(2K+1,)*L + (D,)``, index ``K`` holding the
zero mode.  ``|l|`` is the 1-norm throughout; entries outside the 1-norm
ball of radius ``K`` are kept at zero.  Polynomials are immutable.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools
import numbers

import mpmath
import numpy as np
from scipy import signal

from . import numerics as nx
from .errors import DimensionMismatch, NormOverflow

__all__ = [
    "TrigPoly",
    "NormParams",
    "Potential",
    "linear_combine",
    "convolve_product",
    "shift",
    "derivative",
    "average",
    "norm",
    "evaluate_grid",
    "evaluate_uniform_grid",
    "project_uniform_grid",
]


@lru_cache(maxsize=None)
def _index_grids(L, K):
    axes = np.arange(-K, K + 1)
    return tuple(np.meshgrid(*([axes] * L), indexing="ij"))


@lru_cache(maxsize=None)
def _one_norms(L, K):
    return sum(np.abs(g) for g in _index_grids(L, K))


def _flip(arr):
    L = arr.ndim - 1
    return arr[(slice(None, None, -1),) * L]


def _pad(arr, K):
    """Zero-pad the domain axes of ``arr`` to half-width ``K``."""
    k0 = (arr.shape[0] - 1) // 2
    if k0 == K:
        return arr
    L = arr.ndim - 1
    out = nx.zeros((2 * K + 1,) * L + (arr.shape[-1],))
    sl = (slice(K - k0, K + k0 + 1),) * L
    out[sl] = arr
    return out


def _is_real_scalar(c):
    if isinstance(c, (numbers.Real, mpmath.mpf)):
        return True
    if isinstance(c, (complex, np.complexfloating)):
        return c.imag == 0
    if isinstance(c, mpmath.mpc):
        return c.imag == 0
    return False


class TrigPoly:
    """Finitely supported Fourier series ``T^L -> C^D``.

    Parameters
    ----------
    coeffs : ndarray
        Shape ``(2K+1,)*L + (D,)``.
    real : bool
        Mark as a real-valued function.  Conjugate symmetry
        ``c_{-l} = conj(c_l)`` is imposed on construction.
    """

    __slots__ = ("_c", "_real")

    def __init__(self, coeffs, real=False):
        c = np.asarray(coeffs)
        if c.ndim < 2:
            raise ValueError("coeffs needs at least one domain axis and a range axis")
        L = c.ndim - 1
        n = c.shape[0]
        if n % 2 != 1 or any(s != n for s in c.shape[:-1]):
            raise ValueError(f"bad coefficient shape {c.shape}")
        K = (n - 1) // 2
        if c.dtype != object:
            c = c.astype(complex)
        if L > 1:
            outside = _one_norms(L, K) > K
            if np.any(c[outside] != 0):
                raise ValueError("coefficients outside the 1-norm ball of the degree")
        if real:
            c = (c + nx.conj(_flip(c))) / 2
        else:
            c = c.copy()
        if c.dtype != object:
            c.flags.writeable = False
        self._c = c
        self._real = bool(real)

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, L, D, degree=0):
        return cls(nx.zeros((2 * degree + 1,) * L + (D,)), real=True)

    @classmethod
    def constant(cls, vec, L, real=None):
        vec = nx.as_complex_array(np.atleast_1d(vec))
        arr = nx.zeros((1,) * L + (vec.shape[0],))
        arr[(0,) * L] = vec
        if real is None:
            real = all(_is_real_scalar(v) for v in vec)
        return cls(arr, real=real)

    @classmethod
    def from_dict(cls, mapping, L, D, real=False, degree=None):
        """Build from ``{ell: vector}``; scalars are accepted when ``D == 1``."""
        ells = [tuple(int(x) for x in np.atleast_1d(e)) for e in mapping]
        for e in ells:
            if len(e) != L:
                raise DimensionMismatch(f"index {e} does not have length {L}")
        K = max((sum(abs(x) for x in e) for e in ells), default=0)
        if degree is not None:
            if degree < K:
                raise ValueError(f"degree {degree} below support radius {K}")
            K = degree
        arr = nx.zeros((2 * K + 1,) * L + (D,))
        for e, v in zip(ells, mapping.values()):
            v = nx.as_complex_array(np.atleast_1d(v))
            if v.shape != (D,):
                raise DimensionMismatch(f"coefficient at {e} is not a {D}-vector")
            arr[tuple(x + K for x in e)] += v
        return cls(arr, real=real)

    @classmethod
    def mode(cls, ell, vec=1.0):
        ell = tuple(int(x) for x in np.atleast_1d(ell))
        vec = np.atleast_1d(vec)
        return cls.from_dict({ell: vec}, len(ell), vec.shape[0])

    # -- attributes -------------------------------------------------------
    @property
    def coeffs(self):
        return self._c

    @property
    def real(self):
        return self._real

    @property
    def domain_dim(self):
        return self._c.ndim - 1

    @property
    def range_dim(self):
        return self._c.shape[-1]

    @property
    def degree(self):
        """Support bound ``K`` (not necessarily attained)."""
        return (self._c.shape[0] - 1) // 2

    def _nonzero_mask(self):
        return np.any(self._c != 0, axis=-1)

    def is_zero(self):
        return not np.any(self._nonzero_mask())

    def attained_degree(self):
        mask = self._nonzero_mask()
        if not np.any(mask):
            return 0
        return int(_one_norms(self.domain_dim, self.degree)[mask].max())

    def coeff(self, ell):
        ell = tuple(int(x) for x in np.atleast_1d(ell))
        K = self.degree
        if len(ell) != self.domain_dim:
            raise DimensionMismatch(f"index {ell} has wrong length")
        if sum(abs(x) for x in ell) > K:
            return nx.zeros((self.range_dim,))
        return self._c[tuple(x + K for x in ell)].copy()

    def items(self):
        """Nonzero ``(ell, vector)`` pairs in lexicographic order of ``ell``."""
        K = self.degree
        mask = self._nonzero_mask()
        for idx in zip(*np.nonzero(mask)):
            yield tuple(int(i) - K for i in idx), self._c[idx]

    def padded(self, degree):
        if degree < self.degree:
            raise ValueError("padding cannot shrink the support")
        return TrigPoly(_pad(self._c, degree), real=self._real)

    def trimmed(self):
        """Same polynomial with the support bound reduced to the attained degree."""
        K, k = self.degree, self.attained_degree()
        L = self.domain_dim
        return TrigPoly(self._c[(slice(K - k, K + k + 1),) * L], real=self._real)

    def as_real(self, rtol=1e-12):
        """Flag as real after checking conjugate symmetry to ``rtol``."""
        c = self._c
        scale = float(np.max(nx.absval(c))) if c.size else 0.0
        defect = float(np.max(nx.absval(c - nx.conj(_flip(c))))) if c.size else 0.0
        if defect > rtol * max(scale, np.finfo(float).tiny):
            raise ValueError(f"not conjugate symmetric: defect {defect:.3e}, scale {scale:.3e}")
        return TrigPoly(c, real=True)

    def converted(self):
        """Copy with coefficients in the current working precision."""
        return TrigPoly(nx.as_complex_array(self._c), real=self._real)

    def component(self, j):
        return TrigPoly(self._c[..., j : j + 1], real=self._real)

    def contract(self, vec):
        """Scalar polynomial ``vec . p`` (no conjugation)."""
        vec = np.asarray(vec)
        if vec.shape != (self.range_dim,):
            raise DimensionMismatch("contraction vector has wrong length")
        out = sum(self._c[..., j] * vec[j] for j in range(self.range_dim))
        real = self._real and all(_is_real_scalar(v) for v in vec)
        return TrigPoly(out[..., None], real=real)

    def times_vector(self, vec):
        """Vector polynomial ``p(theta) * vec`` for scalar-valued ``p``."""
        if self.range_dim != 1:
            raise DimensionMismatch("times_vector needs a scalar-valued polynomial")
        vec = np.asarray(vec)
        out = self._c[..., 0][..., None] * vec.reshape((1,) * self.domain_dim + (-1,))
        real = self._real and all(_is_real_scalar(v) for v in vec)
        return TrigPoly(out, real=real)

    # -- operators --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TrigPoly):
            return linear_combine([(1, self), (1, other)])
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TrigPoly):
            return linear_combine([(1, self), (-1, other)])
        return NotImplemented

    def __neg__(self):
        return linear_combine([(-1, self)])

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return convolve_product(self, other)
        return linear_combine([(other, self)])

    def __rmul__(self, other):
        return linear_combine([(other, self)])

    def __repr__(self):
        terms = ", ".join(f"{e}: {v}" for e, v in itertools.islice(self.items(), 6))
        more = "" if sum(1 for _ in self.items()) <= 6 else ", ..."
        return (f"TrigPoly(L={self.domain_dim}, D={self.range_dim}, K={self.degree}, "
                f"real={self._real}, {{{terms}{more}}})")


def _check_same_shape(polys):
    L, D = polys[0].domain_dim, polys[0].range_dim
    for p in polys[1:]:
        if p.domain_dim != L or p.range_dim != D:
            raise DimensionMismatch(
                f"(L, D) = ({p.domain_dim}, {p.range_dim}) vs ({L}, {D})")
    return L, D


def linear_combine(terms):
    """Coefficientwise ``sum(c * p for c, p in terms)``."""
    terms = list(terms)
    if not terms:
        raise ValueError("empty linear combination")
    polys = [p for _, p in terms]
    L, D = _check_same_shape(polys)
    K = max(p.degree for p in polys)
    out = nx.zeros((2 * K + 1,) * L + (D,))
    for c, p in terms:
        k = p.degree
        out[(slice(K - k, K + k + 1),) * L] += c * p.coeffs
    real = all(p.real and _is_real_scalar(c) for c, p in terms)
    return TrigPoly(out, real=real)


def _convolve_objects(a, b):
    """Full N-d convolution for object arrays (mpmath scalars)."""
    L = a.ndim
    out_shape = tuple(sa + sb - 1 for sa, sb in zip(a.shape, b.shape))
    if L == 1:
        return np.convolve(a, b)
    out = np.empty(out_shape, dtype=object)
    out.fill(mpmath.mpc(0))
    for idx in zip(*np.nonzero(a != 0)):
        sl = tuple(slice(i, i + s) for i, s in zip(idx, b.shape))
        out[sl] += a[idx] * b
    return out


def convolve_product(p, q):
    """Pointwise product of a scalar-valued ``p`` with ``q`` (Cauchy convolution)."""
    if p.range_dim != 1:
        raise DimensionMismatch("left factor of a product must be scalar-valued")
    if p.domain_dim != q.domain_dim:
        raise DimensionMismatch("factors live on tori of different dimension")
    a = p.coeffs[..., 0]
    obj = a.dtype == object or q.coeffs.dtype == object
    cols = []
    for j in range(q.range_dim):
        b = q.coeffs[..., j]
        if obj:
            a_o = a if a.dtype == object else nx.as_complex_array(a)
            b_o = b if b.dtype == object else nx.as_complex_array(b)
            cols.append(_convolve_objects(a_o, b_o))
        elif a.ndim == 1:
            cols.append(np.convolve(a, b))
        else:
            cols.append(signal.convolve(a, b, mode="full", method="direct"))
    out = np.stack(cols, axis=-1)
    return TrigPoly(out, real=p.real and q.real)


def _phase(L, K, vec):
    """``l . vec`` over the index grid (object dtype when ``vec`` is mpf)."""
    grids = _index_grids(L, K)
    return sum(g * v for g, v in zip(grids, vec))


def shift(p, delta):
    """Polynomial ``theta -> p(theta + delta)``."""
    delta = np.atleast_1d(delta)
    if delta.shape != (p.domain_dim,):
        raise DimensionMismatch("shift vector has wrong length")
    if all(d == 0 for d in delta):
        return p
    factor = nx.expj(_phase(p.domain_dim, p.degree, list(delta)))
    return TrigPoly(p.coeffs * factor[..., None], real=p.real)


def derivative(p, direction):
    """Directional derivative; ``direction`` is an axis index or an L-vector."""
    L = p.domain_dim
    if isinstance(direction, (int, np.integer)):
        vec = [0] * L
        vec[int(direction)] = 1
    else:
        vec = list(np.atleast_1d(direction))
        if len(vec) != L:
            raise DimensionMismatch("direction has wrong length")
    factor = 1j * _phase(L, p.degree, vec)
    real = p.real and all(_is_real_scalar(v) for v in vec)
    return TrigPoly(p.coeffs * factor[..., None], real=real)


def average(p):
    """Mean over the torus, i.e. the zero-mode coefficient vector."""
    K = p.degree
    return p.coeffs[(K,) * p.domain_dim].copy()


@dataclass(frozen=True)
class NormParams:
    """Weights of the analytic-Sobolev norm: strip width ``rho`` and exponent ``r``."""

    rho: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if self.rho < 0 or self.r < 0:
            raise ValueError("rho and r must be non-negative")


def norm(p, params=NormParams()):
    """``sqrt(|c_0|^2 + sum_{l != 0} |c_l|^2 exp(2|l| rho) (1 + |l|^2)^r)``.

    Raises :class:`NormOverflow` in binary64 when a weight or the sum is
    not representable.
    """
    L, K = p.domain_dim, p.degree
    ln = _one_norms(L, K)
    c = p.coeffs
    if c.dtype == object or not nx.is_native():
        rho = mpmath.mpf(params.rho)
        r = mpmath.mpf(params.r)
        total = mpmath.mpf(0)
        for idx in zip(*np.nonzero(np.any(c != 0, axis=-1))):
            n = int(ln[idx])
            mag2 = sum(abs(mpmath.mpc(v)) ** 2 for v in c[idx])
            w = 1 if n == 0 else mpmath.exp(2 * n * rho) * (1 + n * n) ** r
            total += mag2 * w
        return mpmath.sqrt(total)
    with np.errstate(over="ignore", invalid="ignore"):
        mag2 = np.sum(np.abs(c) ** 2, axis=-1)
        used = mag2 != 0
        w = np.exp(2.0 * ln * params.rho) * (1.0 + ln.astype(float) ** 2) ** params.r
        w[(K,) * L] = 1.0
        if np.any(~np.isfinite(w[used])):
            raise NormOverflow(
                f"weight exp(2|l|rho) overflows binary64 for rho={params.rho}, |l|<={K}")
        total = float(np.sum(mag2[used] * w[used]))
    if not np.isfinite(total):
        raise NormOverflow("weighted norm overflows binary64")
    return float(np.sqrt(total))


def evaluate_grid(p, points):
    """Direct summation of ``p`` at each row of ``points`` (shape ``(P, L)``)."""
    pts = np.asarray(points, dtype=object if not nx.is_native() else float)
    pts = pts.reshape(-1, p.domain_dim)
    K, L = p.degree, p.domain_dim
    ells = np.stack([g.ravel() for g in _index_grids(L, K)], axis=-1)
    coeffs = p.coeffs.reshape(-1, p.range_dim)
    keep = np.any(coeffs != 0, axis=-1)
    ells, coeffs = ells[keep], coeffs[keep]
    if coeffs.shape[0] == 0:
        return nx.zeros((pts.shape[0], p.range_dim))
    if coeffs.dtype == object or pts.dtype == object:
        phase = np.dot(pts.astype(object), ells.T.astype(object))
        return np.dot(nx.expj(phase), nx.as_complex_array(coeffs))
    return np.exp(1j * pts @ ells.T) @ coeffs


def _dft_matrix(M, K, sign):
    """``exp(sign * i * l * theta_j)`` for ``theta_j = 2 pi j / M``, ``|l| <= K``."""
    two_pi = 2 * nx.pi()
    if nx.is_native():
        j = np.arange(M)[:, None]
        ell = np.arange(-K, K + 1)[None, :]
        return np.exp(sign * 1j * two_pi * (j * ell % M) / M)
    out = np.empty((M, 2 * K + 1), dtype=object)
    for j in range(M):
        for i, ell in enumerate(range(-K, K + 1)):
            out[j, i] = mpmath.expj(sign * two_pi * ((j * ell) % M) / M)
    return out


def evaluate_uniform_grid(p, M):
    """Values on the tensor grid ``theta = 2 pi j / M``; shape ``(M,)*L + (D,)``.

    Separable, one axis at a time.
    """
    K = p.degree
    E = _dft_matrix(M, K, +1)
    vals = p.coeffs
    if E.dtype == object and vals.dtype != object:
        vals = nx.as_complex_array(vals)
    for axis in range(p.domain_dim):
        vals = np.moveaxis(np.tensordot(E, vals, axes=([1], [axis])), 0, axis)
    return vals


def project_uniform_grid(values, K, real=False):
    """Fourier coefficients ``|l|_inf <= K`` of grid samples (inverse of the above).

    Modes outside the 1-norm ball of radius ``K`` are discarded.
    """
    vals = np.asarray(values)
    L = vals.ndim - 1
    M = vals.shape[0]
    if 2 * K + 1 > M:
        raise ValueError("grid too coarse for the requested degree")
    E = _dft_matrix(M, K, -1).T
    for axis in range(L):
        vals = np.moveaxis(np.tensordot(E, vals, axes=([1], [axis])), 0, axis)
    vals = vals / M**L
    if L > 1:
        vals = vals.copy()
        vals[_one_norms(L, K) > K] = 0
    return TrigPoly(vals, real=real)


class Potential:
    """Trigonometric-polynomial forcing ``V`` and its gradient ``V'``.

    ``vcoeffs`` is a scalar-valued real polynomial on ``T^D``.  The gradient
    coefficient at ``l`` is ``alpha_l = i l Vhat_l``.
    """

    def __init__(self, vcoeffs):
        if vcoeffs.range_dim != 1:
            raise DimensionMismatch("V must be scalar-valued")
        self.vcoeffs = vcoeffs if vcoeffs.real else vcoeffs.as_real()
        self.dim = vcoeffs.domain_dim
        D, K = self.dim, vcoeffs.degree
        grad = vcoeffs.coeffs[..., 0][..., None] * np.stack(
            [1j * g for g in _index_grids(D, K)], axis=-1)
        self.gradient = TrigPoly(grad, real=True)
        self.degree = self.gradient.attained_degree()
        self.upsilon = sum(
            (nx.sqrt(sum(abs(x) ** 2 for x in vec)) for _, vec in self.alphas()),
            nx.scalar(0))

    @classmethod
    def from_cos_sin(cls, dim, terms):
        """``V(q) = sum a cos(l.q) + b sin(l.q)`` from ``[(l, a, b), ...]``."""
        coeffs = {}
        for ell, a, b in terms:
            ell = tuple(int(x) for x in np.atleast_1d(ell))
            if len(ell) != dim:
                raise DimensionMismatch(f"mode {ell} is not in Z^{dim}")
            a, b = nx.scalar(a), nx.scalar(b)
            neg = tuple(-x for x in ell)
            if ell == neg:
                coeffs[ell] = coeffs.get(ell, 0) + a
                continue
            half = nx.scalar(2)
            coeffs[ell] = coeffs.get(ell, 0) + (a - 1j * b) / half
            coeffs[neg] = coeffs.get(neg, 0) + (a + 1j * b) / half
        return cls(TrigPoly.from_dict(coeffs, dim, 1, real=True))

    def alphas(self):
        """Nonzero gradient coefficients ``[(l, alpha_l)]``, lexicographic in ``l``."""
        return list(self.gradient.items())

    def scaled(self, eta):
        return Potential(linear_combine([(eta, self.vcoeffs)]))

    def converted(self):
        return Potential(self.vcoeffs.converted())

    def __repr__(self):
        return f"Potential(D={self.dim}, J={self.degree}, upsilon={float(self.upsilon):.6g})"
