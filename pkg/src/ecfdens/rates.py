"""Anisotropic Sobolev smoothness: aggregate exponent, optimal cutoffs, rates."""

from __future__ import annotations

from dataclasses import dataclass
from math import log

import numpy as np


def is_in_class_A(A, det_tol: float = 1e-12) -> bool:
    """Invertible with every row l1-norm at most 1 (maps the unit box into
    itself)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    if abs(float(np.linalg.det(A))) <= det_tol:
        return False
    return bool(np.max(np.sum(np.abs(A), axis=1)) <= 1.0 + 1e-12)


@dataclass(frozen=True)
class SobolevSpec:
    """Smoothness exponents s_k (> 0), radius L, optional frame matrix A."""

    s: tuple[float, ...]
    L: float = 1.0
    A: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.s))
        if any(v <= 0.0 for v in s):
            raise ValueError("smoothness exponents must be positive")
        if self.L <= 0.0:
            raise ValueError("radius L must be positive")
        if self.A is not None:
            A = np.asarray(self.A, dtype=float)
            if A.shape != (len(s), len(s)):
                raise ValueError("frame matrix shape must match len(s)")
            if not is_in_class_A(A):
                raise ValueError("frame matrix must be invertible with row l1-norms <= 1")
            object.__setattr__(
                self, "A", tuple(tuple(float(v) for v in row) for row in A)
            )
        object.__setattr__(self, "s", s)

    @property
    def d(self) -> int:
        return len(self.s)

    @property
    def s_bar(self) -> float:
        return 1.0 / sum(1.0 / v for v in self.s)


@dataclass(frozen=True)
class RateInfo:
    s_bar: float
    m_star: tuple[float, ...]
    rate_exponent: float
    rate_value: float


def sobolev_rate(spec: SobolevSpec, n: int) -> RateInfo:
    """Optimal cutoffs m_k* = (n/log n)^(2 s_bar / (2 s_k (2 s_bar + 1))) and
    the rate (n / log n)^(-2 s_bar / (2 s_bar + 1))."""
    if n < 2:
        raise ValueError("need n >= 2")
    s_bar = spec.s_bar
    ratio = n / log(n)
    exponent = 2.0 * s_bar / (2.0 * s_bar + 1.0)
    m_star = tuple(
        ratio ** (2.0 * s_bar / (2.0 * sk * (2.0 * s_bar + 1.0))) for sk in spec.s
    )
    return RateInfo(
        s_bar=s_bar,
        m_star=m_star,
        rate_exponent=exponent,
        rate_value=ratio ** (-exponent),
    )
