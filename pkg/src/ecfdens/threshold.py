"""Threshold rules and excursion-set masks for spectral fields."""

from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt

import numpy as np

from .grids import FrequencyGrid, GridField

RULE_SQRT_LOG = "sqrt-log"
RULE_LOG = "log"
RULE_U_DEPENDENT = "u-dependent"
RULE_KINDS = (RULE_SQRT_LOG, RULE_LOG, RULE_U_DEPENDENT)


@dataclass(frozen=True)
class ThresholdRule:
    """Threshold level family.

    sqrt-log:     (1 + kappa sqrt(log n)) / sqrt(n)
    log:          (1 + kappa log n) / sqrt(n)
    u-dependent:  kappa sqrt(log(h(u) n) / n),  h(u) = prod_k (1 + |u_k|)

    Levels are nondecreasing in kappa for fixed n and u.
    """

    kind: str
    kappa: float

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kappa < 0.0 or not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite and nonnegative")

    def level(self, n: int, grid: FrequencyGrid | None = None):
        """Threshold level: a scalar for the constant rules, an array shaped
        like the grid for the u-dependent rule."""
        if n < 2:
            raise ValueError("need n >= 2 so that log n > 0")
        if self.kind == RULE_SQRT_LOG:
            return (1.0 + self.kappa * sqrt(log(n))) / sqrt(n)
        if self.kind == RULE_LOG:
            return (1.0 + self.kappa * log(n)) / sqrt(n)
        if grid is None:
            raise ValueError("u-dependent rule needs the grid")
        h = np.ones(grid.shape)
        for k, ax in enumerate(grid.axes):
            shape = [1] * grid.d
            shape[k] = ax.size
            h = h * (1.0 + np.abs(ax)).reshape(shape)
        return self.kappa * np.sqrt(np.log(h * n) / n)


@dataclass(frozen=True)
class BinaryMask:
    """Excursion set of a spectral field as a boolean lattice."""

    grid: FrequencyGrid
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != self.grid.shape:
            raise ValueError(
                f"mask shape {bits.shape} does not match grid {self.grid.shape}"
            )
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def node_count(self) -> int:
        return int(np.count_nonzero(self.bits))


def threshold_mask(field: GridField, rule: ThresholdRule, n: int) -> BinaryMask:
    """Excursion set {u : |field(u)| >= level(u, n)}; ties are kept (>=)."""
    level = rule.level(n, field.grid)
    return BinaryMask(grid=field.grid, bits=np.abs(field.values) >= level)


def apply_threshold(field: GridField, mask: BinaryMask) -> GridField:
    """Zero the field outside the mask."""
    if mask.grid != field.grid:
        raise ValueError("field and mask live on different grids")
    return GridField(grid=field.grid, values=field.values * mask.bits)


def write_mask_pbm(mask: BinaryMask, path) -> None:
    """Dump a 1-D or 2-D mask as a plain-text PBM (P1); set nodes are 1."""
    bits = mask.bits
    if bits.ndim == 1:
        bits = bits[None, :]
    if bits.ndim != 2:
        raise ValueError("PBM export supports d in {1, 2}")
    height, width = bits.shape
    with open(path, "w") as fh:
        fh.write("P1\n")
        fh.write(f"{width} {height}\n")
        for row in bits:
            fh.write(" ".join("1" if b else "0" for b in row) + "\n")
