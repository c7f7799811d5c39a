"""Reproducible samplers: i.i.d. draws, a polynomially mixing hold-or-redraw
Markov chain, and a dyadic autoregressive chain, each pushed through the
target's quantile to hit a prescribed marginal.

Streams use the counter-based Philox generator keyed by (seed, stream_id),
so parallel replications are reproducible independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .grids import SampleSet
from .targets import TargetModel

CHAIN_IID = "iid"
CHAIN_DOUKHAN = "doukhan"
CHAIN_DYADIC_AR = "dyadic-ar"
CHAIN_KINDS = (CHAIN_IID, CHAIN_DOUKHAN, CHAIN_DYADIC_AR)

_P_CLIP = 1e-15


@dataclass(frozen=True)
class RngStream:
    """Deterministic stream: identical (seed, stream_id) gives an identical
    sample path on every platform and under any parallel schedule."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChainConfig:
    """What to simulate: kind, mixing exponent (hold-or-redraw chain only),
    target marginal, path length, burn-in (dyadic chain only)."""

    kind: str
    target: TargetModel
    n: int
    a: float | None = None
    burn_in: int = 0

    def __post_init__(self):
        if self.kind not in CHAIN_KINDS:
            raise ValueError(f"unknown chain kind {self.kind!r}")
        if self.n < 0:
            raise ValueError("path length must be nonnegative")
        if self.kind == CHAIN_DOUKHAN:
            if self.a is None or self.a <= 1.0:
                raise ValueError("hold-or-redraw chain needs mixing exponent a > 1")
            if self.target.quantile_fn is None:
                raise ValueError("chain target needs a quantile function")
        if self.kind == CHAIN_DYADIC_AR:
            if self.burn_in < 0:
                raise ValueError("burn-in must be nonnegative")
            if self.target.quantile_fn is None:
                raise ValueError("chain target needs a quantile function")


def sample_iid(model: TargetModel, n: int, rng: RngStream) -> SampleSet:
    """n independent draws with the model's law."""
    return SampleSet(model.sample(n, rng.generator()))


def doukhan_chain(a: float, target: TargetModel, n: int, rng: RngStream) -> SampleSet:
    """Stationary [0,1] chain Y_{j+1} = Y_j 1{U >= Y_j} + G(V) 1{U < Y_j}
    with invariant density a y^(a-1) and redraw quantile G(v) = v^(1/(a+1));
    output is target.quantile(Y_j^a).

    The chain's mixing coefficients decay exactly at rate j^(-a); Y^a is
    uniform on [0, 1].
    """
    if a <= 1.0:
        raise ValueError("need mixing exponent a > 1")
    if n == 0:
        return SampleSet(np.empty((0, 1)))
    gen = rng.generator()
    y0 = gen.random() ** (1.0 / a)
    u = gen.random(n - 1) if n > 1 else np.empty(0)
    redraw = gen.random(n - 1) ** (1.0 / (a + 1.0)) if n > 1 else np.empty(0)
    y = np.empty(n)
    y[0] = y0
    cur = y0
    for j in range(n - 1):
        if u[j] < cur:
            cur = redraw[j]
        y[j + 1] = cur
    p = np.clip(y**a, _P_CLIP, 1.0 - _P_CLIP)
    return SampleSet(target.quantile(p)[:, None])


def dyadic_ar_chain(
    target: TargetModel, n: int, burn_in: int, rng: RngStream
) -> SampleSet:
    """Z_0 ~ U[0,1], Z_j = (Z_{j-1} + eps_j) / 2 with eps_j ~ Bernoulli(1/2);
    the Z_j are uniform on [0, 1] and the output is target.quantile(Z_j)
    after discarding ``burn_in`` initial steps."""
    if burn_in < 0:
        raise ValueError("burn-in must be nonnegative")
    if n == 0:
        return SampleSet(np.empty((0, 1)))
    gen = rng.generator()
    z0 = gen.random()
    steps = n + burn_in - 1
    if steps > 0:
        eps = gen.integers(0, 2, steps).astype(float)
        rest, _ = lfilter([0.5], [1.0, -0.5], eps, zi=np.array([0.5 * z0]))
        z = np.concatenate([[z0], rest])
    else:
        z = np.array([z0])
    z = z[burn_in:]
    p = np.clip(z, _P_CLIP, 1.0 - _P_CLIP)
    return SampleSet(target.quantile(p)[:, None])


def generate(config: ChainConfig, rng: RngStream) -> SampleSet:
    """Dispatch on the chain kind."""
    if config.kind == CHAIN_IID:
        return sample_iid(config.target, config.n, rng)
    if config.kind == CHAIN_DOUKHAN:
        return doukhan_chain(config.a, config.target, config.n, rng)
    return dyadic_ar_chain(config.target, config.n, config.burn_in, rng)
