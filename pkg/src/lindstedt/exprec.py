"""Order-by-order coefficients of ``exp(i l . (hull))`` for a power-series hull.

For a series ``s(eps) = sum_{n>=1} eps^n s_n`` the coefficients of

    exp(i l . (phase + s(eps))) = sum_n eps^n layer_n

obey, after differentiating in ``eps``,

    n layer_n = sum_{m=0}^{n-1} (m+1) (i l . s_{m+1}) layer_{n-1-m}.

For maximal tori the phase is ``theta`` itself; for lower tori it is
``theta k + g_0`` with ``g_0`` constant, so layer 0 is a single mode at
frequency ``l . k`` with phase ``exp(i l . g_0)``.
"""

import numpy as np

from . import numerics as nx
from .errors import MissingOrder
from .fourier import TrigPoly, convolve_product, linear_combine

__all__ = ["ExpCache", "init_maximal", "init_lower", "extend", "peek"]


class ExpCache:
    """Layers ``E^l_0, E^l_1, ...`` for one mode ``l``.

    ``variant`` is ``("maximal",)`` or ``("lower", k, g0)``.
    """

    def __init__(self, ell, layer0, variant):
        self.ell = tuple(int(x) for x in ell)
        self.variant = variant
        self.layers = [layer0]
        # (series element, i l . element) pairs, index m holds order m + 1
        self._contractions = []

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, n):
        return self.layers[n]

    def _ell_vec(self):
        return np.array([1j * e for e in self.ell], dtype=complex)

    def _contraction(self, m, element):
        """``i l . s_{m+1}``, reused while the series element is unchanged."""
        if m < len(self._contractions) and self._contractions[m][0] is element:
            return self._contractions[m][1]
        return element.contract(self._ell_vec())

    def _remember(self, m, element, value):
        if m < len(self._contractions):
            self._contractions[m] = (element, value)
        else:
            self._contractions.append((element, value))

    def _next_layer(self, series, remember):
        n = len(self.layers)
        if len(series) < n:
            raise MissingOrder(f"layer {n} needs series orders 1..{n}, got {len(series)}")
        terms = []
        for m in range(n):
            c = self._contraction(m, series[m])
            if remember:
                self._remember(m, series[m], c)
            terms.append(((m + 1), convolve_product(c, self.layers[n - 1 - m])))
        total = linear_combine(terms)
        return linear_combine([(1 / nx.scalar(n), total)])


def init_maximal(ell, D):
    """Cache for ``exp(i l . (theta + u))`` on ``T^D``; layer 0 is ``exp(i l.theta)``."""
    ell = tuple(int(x) for x in np.atleast_1d(ell))
    if len(ell) != D:
        raise ValueError(f"mode {ell} is not in Z^{D}")
    layer0 = TrigPoly.from_dict({ell: [1]}, D, 1)
    return ExpCache(ell, layer0, ("maximal",))


def init_lower(ell, k, g0):
    """Cache for ``exp(i l . (theta k + g))`` on ``T^1`` with constant ``g_0``."""
    ell = tuple(int(x) for x in np.atleast_1d(ell))
    k = tuple(int(x) for x in k)
    freq = sum(a * b for a, b in zip(ell, k))
    phase = sum((a * b for a, b in zip(ell, g0)), nx.scalar(0))
    layer0 = TrigPoly.from_dict({(freq,): [nx.expj(phase)]}, 1, 1)
    return ExpCache(ell, layer0, ("lower", k, tuple(g0)))


def extend(cache, series):
    """Append the next layer computed from ``series = [s_1, ..., s_n]``.

    Only ``series[:n]`` is read, where ``n`` is the index of the new layer.
    """
    cache.layers.append(cache._next_layer(series, remember=True))
    return cache


def peek(cache, series):
    """The layer :func:`extend` would append, without storing anything."""
    return cache._next_layer(series, remember=False)
