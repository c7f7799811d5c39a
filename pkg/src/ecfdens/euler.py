"""Euler characteristic of excursion masks and the threshold-constant scan.

Masks are unions of closed unit cells (segments in d = 1, squares in d = 2)
of a cubical complex; chi = V - E in d = 1 and V - E + F in d = 2, counting
distinct vertices, edges and faces of the union.  For pixel images this is
the (8-connected components) - (4-connected bounded holes) convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridField
from .threshold import RULE_LOG, RULE_SQRT_LOG, BinaryMask, ThresholdRule

STEP_INDEX = "index"
STEP_UNIT = "unit"


def _chi_bits(bits: np.ndarray) -> int:
    if bits.ndim == 1:
        padded = np.pad(bits, 1)
        vertices = np.count_nonzero(padded[:-1] | padded[1:])
        edges = np.count_nonzero(bits)
        return int(vertices - edges)
    if bits.ndim == 2:
        padded = np.pad(bits, 1)
        faces = np.count_nonzero(bits)
        vertices = np.count_nonzero(
            padded[:-1, :-1] | padded[:-1, 1:] | padded[1:, :-1] | padded[1:, 1:]
        )
        edges = np.count_nonzero(padded[:-1, 1:-1] | padded[1:, 1:-1])
        edges += np.count_nonzero(padded[1:-1, :-1] | padded[1:-1, 1:])
        return int(vertices - edges + faces)
    raise ValueError("Euler characteristic supports d in {1, 2} only")


def euler_characteristic(mask: BinaryMask) -> int:
    """chi of the union of closed unit cells spanned by the set nodes."""
    return _chi_bits(mask.bits)


@dataclass(frozen=True)
class KappaSelection:
    """Result of the stabilization scan over kappa = k * delta."""

    delta: float
    kappa_max: float
    window: int
    rule_kind: str
    step: str
    selected_kappa: float
    stabilized: bool
    chi_curve: tuple[tuple[float, int], ...]

    def selected_rule(self) -> ThresholdRule:
        return ThresholdRule(kind=self.rule_kind, kappa=self.selected_kappa)


def select_kappa(
    field: GridField,
    n: int,
    rule_kind: str = RULE_SQRT_LOG,
    delta: float = 0.05,
    kappa_max: float = 5.0,
    window: int = 1,
    step: str = STEP_INDEX,
) -> KappaSelection:
    """First kappa on the delta-lattice where the mask's Euler characteristic
    stops moving.

    Scans k = 0, 1, ..., floor(kappa_max / delta) and records
    chi_k = chi({|field| >= level(k delta)}).  With ``step='index'`` the
    selected kappa is k* delta for the first k >= window with
    chi_k = chi_{k-1} = ... = chi_{k-window}; with ``step='unit'`` the
    comparison is against the level at kappa - 1 instead of the previous
    lattice point.  Returns kappa_max flagged "not stabilized" if the scan
    never settles.
    """
    if rule_kind not in (RULE_SQRT_LOG, RULE_LOG):
        raise ValueError("scan supports the sqrt-log and log rules")
    if delta <= 0.0 or not np.isfinite(delta):
        raise ValueError("delta must be positive")
    if kappa_max < delta:
        raise ValueError("kappa_max must be at least delta")
    if window < 1:
        raise ValueError("window must be >= 1")
    if step not in (STEP_INDEX, STEP_UNIT):
        raise ValueError("step must be 'index' or 'unit'")
    if n < 2:
        raise ValueError("need n >= 2")

    moduli = np.abs(field.values)
    logn = np.log(n)
    slope = np.sqrt(logn) if rule_kind == RULE_SQRT_LOG else logn

    def chi_at(kappa: float) -> int:
        # direct level formula; the scan also probes kappa - 1 < 0 in unit
        # mode, where the (lower) level still defines a valid excursion set
        level = (1.0 + kappa * slope) / np.sqrt(n)
        return _chi_bits(moduli >= level)

    count = int(np.floor(kappa_max / delta + 1e-9))
    kappas = [k * delta for k in range(count + 1)]
    chis = [chi_at(k) for k in kappas]
    curve = tuple(zip(kappas, chis))

    selected = None
    if step == STEP_INDEX:
        for k in range(window, count + 1):
            if all(chis[k - i] == chis[k - i - 1] for i in range(window)):
                selected = kappas[k]
                break
    else:
        cache: dict[float, int] = {}

        def chi_cached(kappa: float) -> int:
            if kappa not in cache:
                cache[kappa] = chi_at(kappa)
            return cache[kappa]

        for k in range(1, count + 1):
            ok = True
            for i in range(window):
                j = k - i
                if j < 1 or chis[j] != chi_cached(kappas[j] - 1.0):
                    ok = False
                    break
            if ok:
                selected = kappas[k]
                break

    return KappaSelection(
        delta=delta,
        kappa_max=kappa_max,
        window=window,
        rule_kind=rule_kind,
        step=step,
        selected_kappa=selected if selected is not None else kappa_max,
        stabilized=selected is not None,
        chi_curve=curve,
    )
