"""Working-precision scalars.

Everything numeric in the package goes through the helpers here so the
same code runs either on native ``complex128`` arrays (the default,
53-bit mantissa) or on numpy object arrays of :class:`mpmath.mpc` at a
user-chosen bit count::

    with working_precision(200):
        model = ...      # all coefficients now carry 200 bits

The precision is held in a :class:`contextvars.ContextVar`; mpmath's own
global precision is set alongside it, so mixing precisions across threads
is not supported.
"""

from contextlib import contextmanager
from contextvars import ContextVar
import math

import mpmath
import numpy as np

NATIVE_BITS = 53
_BITS = ContextVar("lindstedt_precision_bits", default=NATIVE_BITS)

_mpc = np.frompyfunc(mpmath.mpc, 1, 1)
_mpf = np.frompyfunc(mpmath.mpf, 1, 1)
_expj = np.frompyfunc(mpmath.expj, 1, 1)
_mcos = np.frompyfunc(mpmath.cos, 1, 1)
_mexp = np.frompyfunc(mpmath.exp, 1, 1)
_mabs = np.frompyfunc(abs, 1, 1)
_conj = np.frompyfunc(mpmath.conj, 1, 1)
_re = np.frompyfunc(mpmath.re, 1, 1)
_im = np.frompyfunc(mpmath.im, 1, 1)


def get_bits():
    return _BITS.get()


def is_native():
    return _BITS.get() <= NATIVE_BITS


@contextmanager
def working_precision(bits):
    """Run the enclosed block with ``bits`` of mantissa (53 means float)."""
    bits = int(bits)
    if bits < NATIVE_BITS:
        raise ValueError(f"precision must be at least {NATIVE_BITS} bits")
    token = _BITS.set(bits)
    old = mpmath.mp.prec
    mpmath.mp.prec = max(bits, NATIVE_BITS)
    try:
        yield bits
    finally:
        mpmath.mp.prec = old
        _BITS.reset(token)


def machine_eps():
    return 2.0 ** (1 - get_bits())


def tol_scale():
    """Factor by which default tolerances shrink relative to binary64."""
    return machine_eps() / np.finfo(float).eps


def is_object(arr):
    return isinstance(arr, np.ndarray) and arr.dtype == object


def zeros(shape):
    if is_native():
        return np.zeros(shape, dtype=complex)
    out = np.empty(shape, dtype=object)
    out.fill(mpmath.mpc(0))
    return out


def as_complex_array(values):
    """Convert to the working complex array type."""
    arr = np.asarray(values)
    if is_native():
        if arr.dtype == object:
            arr = np.vectorize(complex, otypes=[complex])(arr)
        return arr.astype(complex)
    if arr.dtype == object:
        return _mpc(arr).astype(object) if arr.size else arr.copy()
    if np.iscomplexobj(arr):
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = mpmath.mpc(v.real, v.imag)
        return out
    return _mpc(arr.astype(float)).astype(object) if arr.size else arr.astype(object)


def as_real_array(values):
    arr = np.asarray(values)
    if is_native():
        if arr.dtype == object:
            arr = np.vectorize(float, otypes=[float])(arr)
        return arr.astype(float)
    if arr.dtype == object:
        return _mpf(arr).astype(object) if arr.size else arr.copy()
    return _mpf(arr.astype(float)).astype(object) if arr.size else arr.astype(object)


def scalar(x):
    """Parse a real scalar at working precision (strings keep all digits)."""
    if is_native():
        return float(x)
    return mpmath.mpf(x)


def pi():
    return math.pi if is_native() else +mpmath.pi


def sqrt(x):
    return math.sqrt(x) if is_native() else mpmath.sqrt(x)


def expj(x):
    """``exp(1j * x)`` elementwise for real ``x``."""
    if is_object(x) or (not is_native()):
        arr = np.asarray(x, dtype=object)
        if arr.ndim == 0:
            return mpmath.expj(arr.item())
        return _expj(arr).astype(object)
    return np.exp(1j * np.asarray(x, dtype=float))


def cos(x):
    if is_object(x) or (not is_native()):
        arr = np.asarray(x, dtype=object)
        if arr.ndim == 0:
            return mpmath.cos(arr.item())
        return _mcos(arr).astype(object)
    return np.cos(np.asarray(x, dtype=float))


def exp(x):
    if is_object(x) or (not is_native()):
        arr = np.asarray(x, dtype=object)
        if arr.ndim == 0:
            return mpmath.exp(arr.item())
        return _mexp(arr).astype(object)
    return np.exp(np.asarray(x, dtype=float))


def absval(arr):
    if is_object(arr):
        return _mabs(arr).astype(object)
    return np.abs(arr)


def conj(arr):
    if is_object(arr):
        return _conj(arr).astype(object)
    return np.conj(arr)


def real_part(arr):
    if is_object(arr):
        return _re(arr).astype(object)
    return np.real(arr)


def imag_part(arr):
    if is_object(arr):
        return _im(arr).astype(object)
    return np.imag(arr)


def to_float(x):
    """Collapse a working-precision real scalar to a Python float."""
    return float(x)


def log_abs(x):
    """Natural log of ``|x|`` that does not overflow for huge mpf values."""
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return float(mpmath.log(abs(x)))
    return math.log(abs(x))
