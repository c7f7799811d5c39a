"""Regularized incomplete gamma function, vectorized over numpy arrays.

Power series for x < a + 1, modified Lentz continued fraction otherwise;
split and iteration guards follow the classical Cephes layout.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 600


def regularized_gamma_p(a: float, x):
    """Lower regularized incomplete gamma P(a, x), a > 0, x >= 0."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    if np.any(x < 0.0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(x)
    small = x < a + 1.0
    if small.any():
        out[small] = _p_series(a, x[small])
    large = ~small
    if large.any():
        out[large] = 1.0 - _q_continued_fraction(a, x[large])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def regularized_gamma_q(a: float, x):
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return 1.0 - regularized_gamma_p(a, x)


def _log_prefactor(a, x):
    return a * np.log(x) - x - gammaln(a)


def _p_series(a, x):
    out = np.zeros_like(x)
    pos = x > 0.0
    if not pos.any():
        return out
    xs = x[pos]
    total = np.full_like(xs, 1.0 / a)
    term = total.copy()
    denom = np.full_like(xs, a)
    active = np.ones(xs.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        denom[active] += 1.0
        term[active] *= xs[active] / denom[active]
        total[active] += term[active]
        active = np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    out[pos] = total * np.exp(_log_prefactor(a, xs))
    return out


def _q_continued_fraction(a, x):
    # Lentz evaluation of the continued fraction for Q(a, x), x >= a + 1.
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        np.copyto(d, _TINY, where=np.abs(d) < _TINY)
        c = b + an / c
        np.copyto(c, _TINY, where=np.abs(c) < _TINY)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    return h * np.exp(_log_prefactor(a, x))
