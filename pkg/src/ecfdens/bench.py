"""Monte-Carlo risk benchmark: replicate -> sample -> ECF -> select kappa ->
threshold -> Parseval risk, with deterministic per-replication RNG streams
and thread-count-independent aggregation."""

from __future__ import annotations

import csv
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import (
    IntegrationDomain,
    boundary_clearance,
    inverse_on_period_fft,
    l2_risk_fourier,
)
from .euler import STEP_INDEX, select_kappa
from .grids import FrequencyGrid, GridField, cf_evaluate, ecf_evaluate, make_grid
from .simulate import (
    CHAIN_DOUKHAN,
    CHAIN_DYADIC_AR,
    CHAIN_IID,
    ChainConfig,
    RngStream,
    generate,
)
from .targets import TargetModel, make_model
from .threshold import RULE_LOG, RULE_SQRT_LOG, ThresholdRule, apply_threshold, threshold_mask


def default_thread_count() -> int:
    env = os.environ.get("ECFDENS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Grid resolution for a model at a given sample size
# ---------------------------------------------------------------------------

def suggest_grid(
    model: TargetModel,
    n: int,
    rule_kind: str = RULE_SQRT_LOG,
    extent=None,
    points_per_axis=None,
    kappa_floor: float | None = None,
    max_points: int = 1201,
) -> FrequencyGrid:
    """Smallest comfortable lattice for thresholding the model's ECF.

    The extent covers the region where |cf| could still beat the lowest
    plausible threshold level (kappa_floor), probed radially, so the selected
    mask stays off the grid boundary; the spacing resolves the CF's
    oscillation scale set by the spatial plotting box.  Explicit
    extent/points override the heuristics.
    """
    d = model.d
    if kappa_floor is None:
        kappa_floor = 0.4 if rule_kind == RULE_SQRT_LOG else 0.05
    if extent is None:
        floor = 0.5 * ThresholdRule(kind=rule_kind, kappa=kappa_floor).level(n)
        radii = np.geomspace(0.05, 400.0, 260)
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif d == 2:
            ang = np.linspace(0.0, np.pi, 64, endpoint=False)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            dirs = np.vstack([dirs, -dirs])
        else:
            g = np.linspace(-1.0, 1.0, 7)
            mesh = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
            mesh = mesh[np.linalg.norm(mesh, axis=1) > 0]
            dirs = mesh / np.linalg.norm(mesh, axis=1, keepdims=True)
        pts = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, d)
        mods = np.abs(model.cf(pts)).reshape(len(dirs), radii.size)
        ext = np.full(d, 1.0)
        for i in range(len(dirs)):
            above = np.nonzero(mods[i] >= floor)[0]
            if above.size:
                reach = radii[above[-1]] * np.abs(dirs[i])
                ext = np.maximum(ext, reach)
        extent = ext * 1.2 + 0.5
    extent = np.broadcast_to(np.asarray(extent, dtype=float), (d,)).copy()
    extent = np.minimum(extent, float(n))  # theoretical integration box cap

    if points_per_axis is None:
        half_widths = [0.5 * (hi - lo) for lo, hi in model.plot_box]
        points = []
        for u, b in zip(extent, half_widths):
            du = math.pi / (4.0 * b)
            m = 2 * int(math.ceil(u / du)) + 1
            points.append(min(m, max_points))
        points_per_axis = points
    return make_grid(extent, points_per_axis)


def decorrelation_lags(model: TargetModel, threshold: float = 0.25) -> tuple[float, ...]:
    """Per-axis lag at which |cf| first drops to ``threshold``.

    ECF noise at two frequencies u, v decorrelates like |cf(u - v)|, so this
    is the spacing at which excursion-set pixels become speckle rather than
    smooth blobs.
    """
    lags = []
    probe = np.geomspace(1e-3, 400.0, 400)
    for k in range(model.d):
        pts = np.zeros((probe.size, model.d))
        pts[:, k] = probe
        mods = np.abs(model.cf(pts))
        below = np.nonzero(mods <= threshold)[0]
        lags.append(float(probe[below[0]]) if below.size else float(probe[-1]))
    return tuple(lags)


def suggest_scan_grid(
    model: TargetModel,
    n: int,
    rule_kind: str = RULE_SQRT_LOG,
    half_width_lags: int | None = None,
) -> FrequencyGrid:
    """Lattice for the Euler-characteristic scan.

    Spacing is the noise decorrelation lag, so that threshold survivors in
    the noise region are near-independent pixels; the window spans
    ``half_width_lags`` lags per side (wide for the sqrt-log rule, whose
    stabilization point is driven by the noise-pixel count; tighter for the
    fast-growing log rule, but wide enough that the first scan steps cannot
    tie by chance).
    """
    if half_width_lags is None:
        if rule_kind == RULE_SQRT_LOG:
            half_width_lags = 150 if model.d >= 2 else 100
        else:
            half_width_lags = 50
    lags = decorrelation_lags(model)
    extent = tuple(min(lag * half_width_lags, float(n)) for lag in lags)
    points = (2 * half_width_lags + 1,) * model.d
    return make_grid(extent, points)


def default_scan_window(rule_kind: str, d: int) -> int:
    # the d = 1 run-count chi has a plateau (occupancy near 1/2) where
    # single-step equality is common by chance; two consecutive equalities
    # suppress those spurious stops
    if rule_kind == RULE_SQRT_LOG and d == 1:
        return 2
    return 1


def experiment_risk(
    field_tilde,
    model: TargetModel,
    domain: IntegrationDomain,
    n: int,
    model_field=None,
    oversample: int = 2,
    x_box: str = "plot",
) -> dict:
    """Normalized L2 error of the positive-part estimator.

    The headline number integrates |max(Re fhat, 0) - f|^2 over the model's
    plotting box (``x_box='plot'``, the region the estimate is consumed on)
    or over one full period cell of the discretized inversion
    (``x_box='period'``, which captures the estimator's entire error energy
    including the stationary noise ripple far from the support).  The plain
    Parseval risk of the unclipped spectral field is returned alongside.
    """
    if x_box not in ("plot", "period"):
        raise ValueError("x_box must be 'plot' or 'period'")
    fourier = l2_risk_fourier(field_tilde, model, domain, n, model_field=model_field)
    center = [0.5 * (lo + hi) for lo, hi in model.plot_box]
    x_grid, raw = inverse_on_period_fft(
        field_tilde, domain, center, oversample=oversample
    )
    clipped = np.maximum(raw, 0.0)
    if x_box == "plot":
        inside = np.ones(x_grid.shape, dtype=bool)
        for k, ax in enumerate(x_grid.axes()):
            lo, hi = model.plot_box[k]
            shape = [1] * x_grid.d
            shape[k] = ax.size
            inside &= ((ax >= lo) & (ax <= hi)).reshape(shape)
    else:
        inside = None
    flat = clipped.ravel()
    err = 0.0
    for start in range(0, x_grid.node_count, 1 << 16):
        idx = np.arange(start, min(start + (1 << 16), x_grid.node_count))
        if inside is not None:
            idx = idx[inside.ravel()[idx]]
            if idx.size == 0:
                continue
        f_true = model.density(x_grid.coordinates(idx))
        err += float(np.sum((flat[idx] - f_true) ** 2))
    risk = err * x_grid.cell_volume
    if model.cf_sq_integral is not None:
        norm = model.cf_sq_integral / (2.0 * math.pi) ** model.d
    else:
        norm = fourier.norm_f_sq
    return {
        "normalized_risk": risk / norm,
        "risk": risk,
        "norm_f_sq": norm,
        "fourier_normalized_risk": fourier.normalized_risk,
        "tail_correction": fourier.tail_correction,
    }


# ---------------------------------------------------------------------------
# Plans and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce a benchmark run bit-for-bit."""

    model: str
    n_values: tuple[int, ...]
    replications: int
    model_params: dict = field(default_factory=dict)
    chain_kind: str = CHAIN_IID
    mixing_a: float | None = None
    burn_in: int = 0
    rule_kind: str = RULE_SQRT_LOG
    kappa: float | None = None  # fixed-kappa mode when set
    delta: float = 0.05
    kappa_max: float = 5.0
    window: int | None = None  # None: 2 for 1-D sqrt-log scans, else 1
    stabilization_step: str = STEP_INDEX
    grid_extent: tuple[float, ...] | None = None
    grid_points: tuple[int, ...] | None = None
    scan_extent: tuple[float, ...] | None = None
    scan_points: tuple[int, ...] | None = None
    domain_kind: str = "full-box"
    x_box: str = "plot"
    seed: int = 20240101
    threads: int | None = None
    gamma_convention: str = "shape-scale"

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("need at least 2 replications")
        if not self.n_values:
            raise ValueError("need at least one sample size")
        if any(n < 2 for n in self.n_values):
            raise ValueError("sample sizes must be >= 2")
        if self.rule_kind not in (RULE_SQRT_LOG, RULE_LOG):
            raise ValueError("rule kind must be sqrt-log or log")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "model_params", dict(self.model_params))
        for name, cast in (
            ("grid_extent", float),
            ("grid_points", int),
            ("scan_extent", float),
            ("scan_points", int),
        ):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(cast(v) for v in value))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_values"] = list(self.n_values)
        for name in ("grid_extent", "grid_points", "scan_extent", "scan_points"):
            if out[name] is not None:
                out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        data = dict(data)
        data["n_values"] = tuple(data["n_values"])
        for name in ("grid_extent", "grid_points", "scan_extent", "scan_points"):
            if data.get(name) is not None:
                data[name] = tuple(data[name])
        return cls(**data)

    def build_model(self) -> TargetModel:
        return make_model(
            self.model, gamma_convention=self.gamma_convention, **self.model_params
        )


@dataclass(frozen=True)
class ReplicationRecord:
    n: int
    replication: int
    normalized_risk: float
    fourier_normalized_risk: float
    risk: float
    norm_f_sq: float
    tail_correction: float
    kappa: float
    stabilized: bool
    boundary_clear: bool
    mask_nodes: int
    failed: bool
    error: str = ""


@dataclass(frozen=True)
class ReportRow:
    model: str
    chain: str
    n: int
    risk_mean: float
    risk_std: float
    kappa_mean: float
    kappa_std: float
    replications: int
    failures: int
    not_stabilized: int
    boundary_violations: int
    wall_seconds: float


@dataclass(frozen=True)
class RiskReport:
    plan: ExperimentPlan
    rows: tuple[ReportRow, ...]
    records: tuple[ReplicationRecord, ...]
    grids: dict


def _aggregate(plan: ExperimentPlan, n: int, records, wall: float) -> ReportRow:
    ok = [r for r in records if not r.failed]
    risks = np.array([r.normalized_risk for r in ok])
    kappas = np.array([r.kappa for r in ok])
    return ReportRow(
        model=plan.model,
        chain=plan.chain_kind,
        n=n,
        risk_mean=float(risks.mean()) if risks.size else math.nan,
        risk_std=float(risks.std(ddof=1)) if risks.size > 1 else math.nan,
        kappa_mean=float(kappas.mean()) if kappas.size else math.nan,
        kappa_std=float(kappas.std(ddof=1)) if kappas.size > 1 else math.nan,
        replications=len(records),
        failures=sum(r.failed for r in records),
        not_stabilized=sum(not r.stabilized for r in records),
        boundary_violations=sum(not r.boundary_clear for r in records),
        wall_seconds=wall,
    )


def run_experiment(plan: ExperimentPlan, progress=None) -> RiskReport:
    """Run the full benchmark described by the plan.

    Replications execute in a thread pool; each owns its RNG stream and the
    results are folded in replication order, so the report is identical for
    any thread count.
    """
    model = plan.build_model()
    threads = plan.threads or default_thread_count()
    window = (
        plan.window
        if plan.window is not None
        else default_scan_window(plan.rule_kind, model.d)
    )
    all_rows = []
    all_records = []
    grids = {}

    for n in plan.n_values:
        base_grid = suggest_grid(
            model,
            n,
            plan.rule_kind,
            extent=plan.grid_extent,
            points_per_axis=plan.grid_points,
        )
        scan_grid = None
        if plan.kappa is None:
            if plan.scan_extent is not None and plan.scan_points is not None:
                scan_grid = make_grid(plan.scan_extent, plan.scan_points)
            else:
                scan_grid = suggest_scan_grid(model, n, plan.rule_kind)
        grids[n] = {"risk": base_grid, "scan": scan_grid}
        domain = IntegrationDomain(kind=plan.domain_kind, n=float(n))
        config = ChainConfig(
            kind=plan.chain_kind,
            target=model,
            n=n,
            a=plan.mixing_a,
            burn_in=plan.burn_in,
        )

        # isolated noise excursions occasionally touch the outer shell; the
        # grid is grown (and the ECF recomputed) until the mask clears it,
        # matching the smallest-clear-extent convention for the default grid
        grown: dict[int, tuple] = {}
        grow_lock = threading.Lock()

        def grid_level(level: int):
            if level == 0 and 0 not in grown:
                grown[0] = (base_grid, cf_evaluate(model, base_grid))
            if level not in grown:
                factor = 1.6**level
                extent = tuple(min(u * factor, float(n)) for u in base_grid.extent)
                points = tuple(
                    min(2 * int(np.ceil((m // 2) * factor)) + 1, 4001)
                    for m in base_grid.points_per_axis
                )
                g = make_grid(extent, points)
                grown[level] = (g, cf_evaluate(model, g))
            return grown[level]

        with grow_lock:
            grid_level(0)

        def one(rep: int) -> ReplicationRecord:
            try:
                samples = generate(config, RngStream(plan.seed, rep))
                if plan.kappa is not None:
                    kappa, stabilized = plan.kappa, True
                else:
                    sel = select_kappa(
                        ecf_evaluate(samples, scan_grid),
                        n,
                        rule_kind=plan.rule_kind,
                        delta=plan.delta,
                        kappa_max=plan.kappa_max,
                        window=window,
                        step=plan.stabilization_step,
                    )
                    kappa, stabilized = sel.selected_kappa, sel.stabilized
                rule = ThresholdRule(kind=plan.rule_kind, kappa=kappa)
                for attempt in range(4):
                    with grow_lock:
                        grid, model_field = grid_level(attempt)
                    ecf = ecf_evaluate(samples, grid)
                    mask = threshold_mask(ecf, rule, n)
                    clear = boundary_clearance(mask)["clear"]
                    if clear or all(
                        u >= float(n) for u in grid.extent
                    ):
                        break
                tilde = apply_threshold(ecf, mask)
                res = experiment_risk(
                    tilde, model, domain, n, model_field=model_field, x_box=plan.x_box
                )
                return ReplicationRecord(
                    n=n,
                    replication=rep,
                    normalized_risk=res["normalized_risk"],
                    fourier_normalized_risk=res["fourier_normalized_risk"],
                    risk=res["risk"],
                    norm_f_sq=res["norm_f_sq"],
                    tail_correction=res["tail_correction"],
                    kappa=kappa,
                    stabilized=stabilized,
                    boundary_clear=clear,
                    mask_nodes=mask.node_count,
                    failed=(not stabilized) or (not clear),
                )
            except Exception as exc:  # recorded, not fatal
                return ReplicationRecord(
                    n=n,
                    replication=rep,
                    normalized_risk=math.nan,
                    fourier_normalized_risk=math.nan,
                    risk=math.nan,
                    norm_f_sq=math.nan,
                    tail_correction=math.nan,
                    kappa=math.nan,
                    stabilized=False,
                    boundary_clear=False,
                    mask_nodes=0,
                    failed=True,
                    error=f"{type(exc).__name__}: {exc}",
                )

        start = time.perf_counter()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(one, range(plan.replications)))
        else:
            records = [one(rep) for rep in range(plan.replications)]
        wall = time.perf_counter() - start
        all_records.extend(records)
        all_rows.append(_aggregate(plan, n, records, wall))
        if progress is not None:
            progress(all_rows[-1])

    return RiskReport(
        plan=plan, rows=tuple(all_rows), records=tuple(all_records), grids=grids
    )


def write_report_csv(report: RiskReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "model",
                "chain",
                "n",
                "risk_mean_x100",
                "risk_std_x100",
                "kappa_mean",
                "kappa_std",
                "failures",
            ]
        )
        for row in report.rows:
            writer.writerow(
                [
                    row.model,
                    row.chain,
                    row.n,
                    repr(100.0 * row.risk_mean),
                    repr(100.0 * row.risk_std),
                    repr(row.kappa_mean),
                    repr(row.kappa_std),
                    row.failures,
                ]
            )


def write_replications_csv(report: RiskReport, path) -> None:
    fields = [
        "n",
        "replication",
        "normalized_risk",
        "fourier_normalized_risk",
        "risk",
        "norm_f_sq",
        "tail_correction",
        "kappa",
        "stabilized",
        "boundary_clear",
        "mask_nodes",
        "failed",
        "error",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for rec in report.records:
            writer.writerow([getattr(rec, f) for f in fields])


def check_report(report: RiskReport, references: dict, rel_tol: float = 0.25) -> list[str]:
    """Compare report rows against reference cells.

    ``references`` maps str(n) (or int n) to the expected normalized risk.
    A row passes when |mean - ref| <= max(3 SE, rel_tol * ref); runs with
    more than 5% failed replications fail outright.  Returns a list of
    human-readable failure strings (empty = all good).
    """
    problems = []
    refs = {int(k): float(v) for k, v in references.items()}
    for row in report.rows:
        if row.n not in refs:
            continue
        ref = refs[row.n]
        if row.failures > 0.05 * row.replications:
            problems.append(
                f"n={row.n}: {row.failures}/{row.replications} replications failed"
            )
            continue
        se = row.risk_std / math.sqrt(row.replications - row.failures)
        tol = max(3.0 * se, rel_tol * abs(ref))
        if abs(row.risk_mean - ref) > tol:
            problems.append(
                f"n={row.n}: risk {row.risk_mean:.4g} vs reference {ref:.4g} "
                f"(tolerance {tol:.4g})"
            )
    return problems


# ---------------------------------------------------------------------------
# Concentration-bound experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationResult:
    empirical_prob: float
    bound: float
    events: int
    trials: int


def deviation_experiment(
    model: TargetModel,
    n: int,
    b: float,
    u_probes,
    replications: int,
    rng: RngStream,
    chunk: int = 64,
) -> DeviationResult:
    """Empirical frequency of |ecf(u) - cf(u)| >= b sqrt(log n / n) across
    replications and probe frequencies, next to the bound 4 n^(-b^2/4)."""
    if b < 0.0:
        raise ValueError("b must be nonnegative")
    probes = np.atleast_2d(np.asarray(u_probes, dtype=float))
    if probes.shape[1] != model.d:
        probes = probes.reshape(-1, model.d)
    phi = model.cf(probes)
    threshold = b * math.sqrt(math.log(n) / n)
    gen = rng.generator()
    events = 0
    done = 0
    while done < replications:
        m = min(chunk, replications - done)
        draws = np.stack([model.sample(n, gen) for _ in range(m)])  # (m, n, d)
        phases = np.exp(1j * np.einsum("rnd,pd->rnp", draws, probes))
        ecf = phases.mean(axis=1)  # (m, probes)
        events += int(np.count_nonzero(np.abs(ecf - phi) >= threshold))
        done += m
    trials = replications * probes.shape[0]
    return DeviationResult(
        empirical_prob=events / trials,
        bound=4.0 * n ** (-(b**2) / 4.0),
        events=events,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# Rate study
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateStudy:
    n_values: tuple[int, ...]
    risk_means: tuple[float, ...]
    risk_stds: tuple[float, ...]
    fitted_slope: float
    theoretical_exponent: float | None


def fit_loglog_slope(n_values, risks) -> float:
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(risks, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def rate_study(plan: ExperimentPlan) -> RateStudy:
    """Mean risk per sample size plus the fitted log-log slope, next to the
    exponent implied by the model's smoothness (when it has one)."""
    n_values = plan.n_values
    if len(n_values) < 3:
        raise ValueError("need at least three sample sizes")
    span = max(n_values) / min(n_values)
    if span < 10**1.5:
        raise ValueError("sample sizes must span at least 1.5 decades")
    report = run_experiment(plan)
    means = tuple(row.risk_mean for row in report.rows)
    stds = tuple(row.risk_std for row in report.rows)
    slope = fit_loglog_slope(n_values, means)

    theory = None
    model = report.plan.build_model()
    if model.sobolev_s is not None:
        from .rates import SobolevSpec, sobolev_rate

        info = sobolev_rate(SobolevSpec(s=model.sobolev_s), max(n_values))
        theory = -info.rate_exponent
    return RateStudy(
        n_values=n_values,
        risk_means=means,
        risk_stds=stds,
        fitted_slope=slope,
        theoretical_exponent=theory,
    )
