"""Command-line interface.

Subcommands: estimate, select-kappa, euler-curve, simulate, bench, risk,
dn-volume, rate, dump-ecf, dump-mask.  Every run that writes files also
writes a ``<stem>.manifest.json`` with the fully resolved parameters; feeding
a manifest back through ``--config`` reproduces the run bit-for-bit.

Exit codes: 0 ok, 64 usage, 65 bad config/parameters, 1 runtime failure,
2 reference-tolerance breach under ``bench --check``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    ExperimentPlan,
    check_report,
    default_thread_count,
    rate_study,
    run_experiment,
    suggest_grid,
    write_replications_csv,
    write_report_csv,
)
from .estimator import (
    IntegrationDomain,
    SpatialGrid,
    boundary_clearance,
    dn_volume,
    dn_volume_asymptotic,
    invert_to_density,
    l2_risk_fourier,
)
from .euler import STEP_INDEX, STEP_UNIT, select_kappa
from .grids import SampleSet, ecf_evaluate, make_grid, write_field_csv
from .simulate import CHAIN_IID, CHAIN_KINDS, ChainConfig, RngStream, generate
from .targets import make_model, model_names
from .threshold import (
    RULE_KINDS,
    RULE_SQRT_LOG,
    ThresholdRule,
    apply_threshold,
    threshold_mask,
    write_mask_pbm,
)


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and "parameters" in data:
        data = data["parameters"]
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _resolved(args: argparse.Namespace, config: dict) -> dict:
    """Flag values win; config fills the gaps; None means 'not set'."""
    merged = dict(config)
    for key, value in vars(args).items():
        if key in ("handler", "config"):
            continue
        if value is not None:
            merged[key] = value
    return merged


def _write_manifest(out_path: Path, command: str, params: dict, outputs) -> None:
    manifest = {
        "tool": "ecfdens",
        "version": __version__,
        "command": command,
        "parameters": {
            k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()
        },
        "outputs": [str(p) for p in outputs],
    }
    path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_samples(path: str) -> SampleSet:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise ConfigError(f"malformed sample row in {path}: {row!r}")
                # else: header line, skip
    if not rows:
        raise ConfigError(f"no samples in {path}")
    return SampleSet(np.asarray(rows))


def _write_samples(samples: SampleSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in samples.data:
            writer.writerow([repr(float(v)) for v in row])


def _model_from(params: dict):
    name = params.get("model")
    if not name:
        raise ConfigError("a --model name is required")
    extra = params.get("model_params") or {}
    if isinstance(extra, str):
        try:
            extra = json.loads(extra)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad --model-params JSON: {exc}") from exc
    try:
        return make_model(
            name,
            gamma_convention=params.get("gamma_convention") or "shape-scale",
            **extra,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _samples_for(params: dict):
    """Samples from --samples, else simulated from the model settings."""
    if params.get("samples"):
        return _read_samples(params["samples"]), None
    model = _model_from(params)
    n = params.get("n")
    if n is None:
        raise ConfigError("need --samples or --model with --n")
    config = ChainConfig(
        kind=params.get("kind") or CHAIN_IID,
        target=model,
        n=int(n),
        a=params.get("a"),
        burn_in=int(params.get("burn_in") or 0),
    )
    rng = RngStream(int(params.get("seed") or 0), int(params.get("stream") or 0))
    return generate(config, rng), model


def _grid_for(params: dict, samples: SampleSet, model=None):
    extent = params.get("extent")
    points = params.get("points")
    if extent is not None and points is not None:
        return make_grid(_as_tuple(extent, float), _as_tuple(points, int))
    rule_kind = params.get("rule") or RULE_SQRT_LOG
    if model is not None:
        return suggest_grid(
            model,
            samples.n,
            rule_kind,
            extent=_as_tuple(extent, float) if extent is not None else None,
            points_per_axis=_as_tuple(points, int) if points is not None else None,
        )
    return _grid_from_samples(samples, rule_kind,
                              extent=_as_tuple(extent, float) if extent else None,
                              points=_as_tuple(points, int) if points else None)


def _as_tuple(value, cast):
    if value is None:
        return None
    if isinstance(value, str):
        return tuple(cast(v) for v in value.split(","))
    if np.isscalar(value):
        return (cast(value),)
    return tuple(cast(v) for v in value)


def _grid_from_samples(samples: SampleSet, rule_kind: str, extent=None, points=None):
    """Data-driven lattice: extent from the decay of |ecf| along rays
    (two consecutive probes above the floor keep noise from inflating it),
    spacing from the sample spread."""
    n, d = samples.n, samples.d
    if extent is None:
        slope = math.sqrt(math.log(n)) if rule_kind == RULE_SQRT_LOG else math.log(n)
        floor = max(0.25 * (1.0 + 0.25 * slope) / math.sqrt(n), 2.2 / math.sqrt(n))
        radii = np.geomspace(0.05, 400.0, 200)
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            ang = np.linspace(0.0, np.pi, 32, endpoint=False)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            dirs = np.vstack([dirs, -dirs])
            if d == 3:
                raise ConfigError("pass --extent/--points explicitly for d = 3")
        ext = np.full(d, 1.0)
        for direction in dirs:
            pts = radii[:, None] * direction[None, :]
            mods = np.abs(
                np.exp(1j * samples.data @ pts.T).mean(axis=0)
            )
            above = (mods >= floor) & np.roll(mods >= 0.7 * floor, -1)
            idx = np.nonzero(above)[0]
            if idx.size:
                ext = np.maximum(ext, radii[idx[-1]] * np.abs(direction))
        extent = tuple(ext * 1.3 + 0.5)
    if points is None:
        med = np.median(samples.data, axis=0)
        spread = np.quantile(np.abs(samples.data - med), 0.995, axis=0) * 1.2 + 1e-6
        points = tuple(
            min(2 * int(math.ceil(u / (math.pi / (4.0 * b)))) + 1, 1201)
            for u, b in zip(extent, spread)
        )
    return make_grid(extent, points)


def _threshold_settings(params: dict, ecf, n: int):
    """Fixed kappa when given, else the stabilization scan."""
    rule_kind = params.get("rule") or RULE_SQRT_LOG
    if params.get("kappa") is not None:
        return float(params["kappa"]), True, None, rule_kind
    sel = select_kappa(
        ecf,
        n,
        rule_kind=rule_kind,
        delta=float(params.get("delta") or 0.05),
        kappa_max=float(params.get("kappa_max") or 5.0),
        window=int(params.get("window") or 1),
        step=params.get("stabilization_step") or STEP_INDEX,
    )
    return sel.selected_kappa, sel.stabilized, sel, rule_kind


def _figures_enabled(params: dict) -> bool:
    val = params.get("figures")
    return True if val is None else bool(val)


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    kind = params.get("kind") or CHAIN_IID
    if kind not in CHAIN_KINDS:
        raise ConfigError(f"unknown chain kind {kind!r}")
    model = _model_from(params)
    config = ChainConfig(
        kind=kind,
        target=model,
        n=int(params.get("n") or 0),
        a=params.get("a"),
        burn_in=int(params.get("burn_in") or 0),
    )
    rng = RngStream(int(params.get("seed") or 0), int(params.get("stream") or 0))
    samples = generate(config, rng)
    out = Path(params.get("out") or "samples.csv")
    _write_samples(samples, out)
    _write_manifest(out, "simulate", params, [out])
    print(f"wrote {samples.n} rows to {out}")
    return 0


def _cmd_dump_ecf(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    samples, model = _samples_for(params)
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    out = Path(params.get("out") or "ecf.csv")
    write_field_csv(field, out)
    params["extent"] = list(grid.extent)
    params["points"] = list(grid.points_per_axis)
    _write_manifest(out, "dump-ecf", params, [out])
    print(f"wrote {grid.node_count} nodes to {out}")
    return 0


def _cmd_dump_mask(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    samples, model = _samples_for(params)
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    kappa, stabilized, _, rule_kind = _threshold_settings(params, field, samples.n)
    mask = threshold_mask(field, ThresholdRule(kind=rule_kind, kappa=kappa), samples.n)
    out = Path(params.get("out") or "mask.pbm")
    write_mask_pbm(mask, out)
    params["kappa_used"] = kappa
    params["stabilized"] = stabilized
    params["extent"] = list(grid.extent)
    params["points"] = list(grid.points_per_axis)
    _write_manifest(out, "dump-mask", params, [out])
    print(f"wrote {mask.node_count}/{grid.node_count} set nodes to {out}")
    return 0


def _cmd_euler_curve(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    samples, model = _samples_for(params)
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    sel = select_kappa(
        field,
        samples.n,
        rule_kind=params.get("rule") or RULE_SQRT_LOG,
        delta=float(params.get("delta") or 0.05),
        kappa_max=float(params.get("kappa_max") or 5.0),
        window=int(params.get("window") or 1),
        step=params.get("stabilization_step") or STEP_INDEX,
    )
    out = Path(params.get("out") or "chi.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kappa", "chi"])
        for kappa, chi in sel.chi_curve:
            writer.writerow([repr(kappa), chi])
    outputs = [out]
    if _figures_enabled(params):
        from .figures import save_chi_curve

        fig_path = out.with_suffix(".png")
        save_chi_curve(sel.chi_curve, sel.selected_kappa, fig_path)
        outputs.append(fig_path)
    params["selected_kappa"] = sel.selected_kappa
    params["stabilized"] = sel.stabilized
    params["extent"] = list(grid.extent)
    params["points"] = list(grid.points_per_axis)
    _write_manifest(out, "euler-curve", params, outputs)
    print(f"selected kappa {sel.selected_kappa:g} (stabilized={sel.stabilized})")
    return 0


def _cmd_select_kappa(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    samples, model = _samples_for(params)
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    sel = select_kappa(
        field,
        samples.n,
        rule_kind=params.get("rule") or RULE_SQRT_LOG,
        delta=float(params.get("delta") or 0.05),
        kappa_max=float(params.get("kappa_max") or 5.0),
        window=int(params.get("window") or 1),
        step=params.get("stabilization_step") or STEP_INDEX,
    )
    out = Path(params.get("out") or "kappa.json")
    payload = {
        "selected_kappa": sel.selected_kappa,
        "stabilized": sel.stabilized,
        "rule": sel.rule_kind,
        "delta": sel.delta,
        "kappa_max": sel.kappa_max,
        "window": sel.window,
        "stabilization_step": sel.step,
        "chi_curve": [[k, c] for k, c in sel.chi_curve],
    }
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    params["extent"] = list(grid.extent)
    params["points"] = list(grid.points_per_axis)
    _write_manifest(out, "select-kappa", params, [out])
    print(f"selected kappa {sel.selected_kappa:g} (stabilized={sel.stabilized})")
    return 0


def _cmd_estimate(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    samples, model = _samples_for(params)
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    kappa, stabilized, _, rule_kind = _threshold_settings(params, field, samples.n)
    mask = threshold_mask(field, ThresholdRule(kind=rule_kind, kappa=kappa), samples.n)
    clearance = boundary_clearance(mask, field)
    tilde = apply_threshold(field, mask)
    domain = IntegrationDomain(
        kind=params.get("domain") or "full-box", n=float(samples.n)
    )

    if params.get("x_lo") is not None and params.get("x_hi") is not None:
        lo = _as_tuple(params["x_lo"], float)
        hi = _as_tuple(params["x_hi"], float)
    elif model is not None:
        lo = tuple(b[0] for b in model.plot_box)
        hi = tuple(b[1] for b in model.plot_box)
    else:
        mins = samples.data.min(axis=0)
        maxs = samples.data.max(axis=0)
        pad = 0.2 * (maxs - mins) + 1e-6
        lo, hi = tuple(mins - pad), tuple(maxs + pad)
    points = _as_tuple(params.get("x_points"), int) or (201,) * samples.d
    if len(points) == 1 and samples.d > 1:
        points = points * samples.d
    x_grid = SpatialGrid(lo=lo, hi=hi, points=points)
    estimate = invert_to_density(tilde, domain, x_grid)

    out = Path(params.get("out") or "density.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{k + 1}" for k in range(samples.d)] + ["fhat"])
        flat = estimate.values.ravel()
        coords = x_grid.coordinates()
        for row, val in zip(coords, flat):
            writer.writerow([repr(float(c)) for c in row] + [repr(float(val))])
    outputs = [out]
    if _figures_enabled(params):
        from .figures import save_density

        fig_path = out.with_suffix(".png")
        save_density(estimate, fig_path, model=model)
        outputs.append(fig_path)
    params.update(
        {
            "kappa_used": kappa,
            "stabilized": stabilized,
            "boundary_clear": clearance["clear"],
            "extent": list(grid.extent),
            "points": list(grid.points_per_axis),
            "x_lo": list(lo),
            "x_hi": list(hi),
            "x_points": list(points),
        }
    )
    _write_manifest(out, "estimate", params, outputs)
    print(
        f"estimated density on {x_grid.node_count} nodes "
        f"(kappa={kappa:g}, mask={mask.node_count} nodes)"
    )
    return 0


def _cmd_risk(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    if not params.get("model"):
        raise ConfigError("risk needs --model (the reference distribution)")
    samples, _ = _samples_for(params)
    model = _model_from(params)
    if model.d != samples.d:
        raise ConfigError("model and sample dimensions disagree")
    grid = _grid_for(params, samples, model)
    field = ecf_evaluate(samples, grid)
    kappa, stabilized, _, rule_kind = _threshold_settings(params, field, samples.n)
    mask = threshold_mask(field, ThresholdRule(kind=rule_kind, kappa=kappa), samples.n)
    tilde = apply_threshold(field, mask)
    domain = IntegrationDomain(
        kind=params.get("domain") or "full-box", n=float(samples.n)
    )
    res = l2_risk_fourier(tilde, model, domain, samples.n)
    out = Path(params.get("out") or "risk.json")
    payload = {
        "risk": res.risk,
        "norm_f_sq": res.norm_f_sq,
        "normalized_risk": res.normalized_risk,
        "tail_correction": res.tail_correction,
        "kappa_used": kappa,
        "stabilized": stabilized,
        "coarse_grid_warning": res.coarse_grid_warning,
    }
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    params["extent"] = list(grid.extent)
    params["points"] = list(grid.points_per_axis)
    _write_manifest(out, "risk", params, [out])
    print(f"normalized risk {res.normalized_risk:.6g} (kappa={kappa:g})")
    return 0


def _cmd_bench(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    plan_path = params.get("plan")
    if not plan_path:
        raise ConfigError("bench needs --plan <config.json>")
    try:
        with open(plan_path) as fh:
            plan_data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read plan {plan_path}: {exc}") from exc
    references = plan_data.pop("references", None)
    if params.get("threads") is not None:
        plan_data["threads"] = int(params["threads"])
    try:
        plan = ExperimentPlan.from_dict(plan_data)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad plan: {exc}") from exc

    out_dir = Path(params.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(
        plan,
        progress=lambda row: print(
            f"model={row.model} chain={row.chain} n={row.n} "
            f"risk={row.risk_mean:.4g} (std {row.risk_std:.3g}) "
            f"kappa={row.kappa_mean:.3g} failures={row.failures}"
        ),
    )
    report_path = out_dir / "report.csv"
    reps_path = out_dir / "replications.csv"
    write_report_csv(report, report_path)
    write_replications_csv(report, reps_path)
    outputs = [report_path, reps_path]
    if _figures_enabled(params):
        from .figures import save_risk_curves

        fig_path = out_dir / "report.png"
        save_risk_curves(report.rows, fig_path)
        outputs.append(fig_path)
    manifest_params = dict(params)
    manifest_params["plan_resolved"] = plan.to_dict()
    manifest_params["grids"] = {
        str(n): {
            name: None
            if g is None
            else {"extent": list(g.extent), "points": list(g.points_per_axis)}
            for name, g in pair.items()
        }
        for n, pair in report.grids.items()
    }
    if references:
        manifest_params["references"] = references
    _write_manifest(report_path, "bench", manifest_params, outputs)

    if params.get("check"):
        if not references:
            raise ConfigError("--check needs a 'references' block in the plan")
        problems = check_report(report, references)
        for p in problems:
            print(f"check failed: {p}", file=sys.stderr)
        if problems:
            return 2
        print("all reference checks passed")
    return 0


def _cmd_dn_volume(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    n = float(params.get("n") or 0)
    d = int(params.get("d") or 2)
    exact = dn_volume(n, d)
    asym = dn_volume_asymptotic(n, d)
    print(repr(exact))
    out = params.get("out")
    if out:
        out = Path(out)
        with open(out, "w") as fh:
            json.dump({"n": n, "d": d, "exact": exact, "asymptotic": asym}, fh, indent=2)
            fh.write("\n")
        _write_manifest(out, "dn-volume", params, [out])
    return 0


def _cmd_rate(args) -> int:
    params = _resolved(args, _load_config(args.config) if args.config else {})
    n_values = _as_tuple(params.get("n_values"), int)
    if not n_values:
        raise ConfigError("rate needs --n-values, e.g. 1000,10000,100000")
    plan = ExperimentPlan(
        model=params.get("model") or "gamma32",
        model_params=json.loads(params["model_params"])
        if isinstance(params.get("model_params"), str)
        else (params.get("model_params") or {}),
        n_values=n_values,
        replications=int(params.get("replications") or 30),
        chain_kind=params.get("kind") or CHAIN_IID,
        mixing_a=params.get("a"),
        burn_in=int(params.get("burn_in") or 0),
        rule_kind=params.get("rule") or RULE_SQRT_LOG,
        kappa=params.get("kappa"),
        delta=float(params.get("delta") or 0.05),
        kappa_max=float(params.get("kappa_max") or 5.0),
        window=int(params.get("window") or 1),
        stabilization_step=params.get("stabilization_step") or STEP_INDEX,
        seed=int(params.get("seed") or 0),
        threads=params.get("threads"),
        gamma_convention=params.get("gamma_convention") or "shape-scale",
    )
    study = rate_study(plan)
    out = Path(params.get("out") or "rate.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "risk_mean", "risk_std"])
        for n, mean, std in zip(study.n_values, study.risk_means, study.risk_stds):
            writer.writerow([n, repr(mean), repr(std)])
    outputs = [out]
    if _figures_enabled(params):
        from .figures import save_rate_fit

        fig_path = out.with_suffix(".png")
        save_rate_fit(study, fig_path)
        outputs.append(fig_path)
    params["fitted_slope"] = study.fitted_slope
    params["theoretical_exponent"] = study.theoretical_exponent
    _write_manifest(out, "rate", params, outputs)
    theory = (
        f"{study.theoretical_exponent:.4f}"
        if study.theoretical_exponent is not None
        else "n/a"
    )
    print(f"fitted log-log slope {study.fitted_slope:.4f} (theory {theory})")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser, *, sampling=False, threshold=False,
                grid=False, figures=False):
    sub.add_argument("--config", help="JSON config or manifest supplying defaults")
    sub.add_argument("--out", help="output path")
    if sampling:
        sub.add_argument("--samples", help="CSV of observations, one row each")
        sub.add_argument("--model", help=f"model name ({', '.join(model_names())})")
        sub.add_argument("--model-params", dest="model_params",
                         help="JSON object of model parameters")
        sub.add_argument("--gamma-convention", dest="gamma_convention",
                         choices=["shape-scale", "shape-rate"])
        sub.add_argument("--kind", choices=list(CHAIN_KINDS), help="sampler kind")
        sub.add_argument("--a", type=float, help="mixing exponent (doukhan chain)")
        sub.add_argument("--burn-in", dest="burn_in", type=int)
        sub.add_argument("--n", type=int, help="sample count")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--stream", type=int, help="RNG stream id")
    if threshold:
        sub.add_argument("--rule", choices=list(RULE_KINDS))
        sub.add_argument("--kappa", type=float, help="fixed threshold constant")
        sub.add_argument("--delta", type=float, help="kappa scan step")
        sub.add_argument("--kappa-max", dest="kappa_max", type=float)
        sub.add_argument("--window", type=int)
        sub.add_argument("--stabilization-step", dest="stabilization_step",
                         choices=[STEP_INDEX, STEP_UNIT])
    if grid:
        sub.add_argument("--extent", help="frequency extent per axis, e.g. 6 or 6,40")
        sub.add_argument("--points", help="odd node counts per axis, e.g. 87,281")
        sub.add_argument("--domain", choices=["full-box", "hyperbolic"])
    if figures:
        sub.add_argument("--figures", action=argparse.BooleanOptionalAction,
                         default=None, help="render PNG figures next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecfdens", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command")

    sp = subs.add_parser("simulate", help="draw i.i.d. or chain samples", parents=[])
    _add_common(sp, sampling=True)
    sp.set_defaults(handler=_cmd_simulate)

    sp = subs.add_parser("dump-ecf", help="empirical characteristic function as CSV")
    _add_common(sp, sampling=True, grid=True)
    sp.set_defaults(handler=_cmd_dump_ecf)

    sp = subs.add_parser("dump-mask", help="threshold excursion set as PBM")
    _add_common(sp, sampling=True, threshold=True, grid=True)
    sp.set_defaults(handler=_cmd_dump_mask)

    sp = subs.add_parser("euler-curve", help="kappa vs Euler characteristic CSV")
    _add_common(sp, sampling=True, threshold=True, grid=True, figures=True)
    sp.set_defaults(handler=_cmd_euler_curve)

    sp = subs.add_parser("select-kappa", help="stabilization scan; JSON summary")
    _add_common(sp, sampling=True, threshold=True, grid=True)
    sp.set_defaults(handler=_cmd_select_kappa)

    sp = subs.add_parser("estimate", help="density estimate on a spatial lattice")
    _add_common(sp, sampling=True, threshold=True, grid=True, figures=True)
    sp.add_argument("--x-lo", dest="x_lo", help="spatial box lower corner, e.g. -5,-5")
    sp.add_argument("--x-hi", dest="x_hi", help="spatial box upper corner")
    sp.add_argument("--x-points", dest="x_points", help="spatial nodes per axis")
    sp.set_defaults(handler=_cmd_estimate)

    sp = subs.add_parser("risk", help="Parseval L2 risk against a reference model")
    _add_common(sp, sampling=True, threshold=True, grid=True)
    sp.set_defaults(handler=_cmd_risk)

    sp = subs.add_parser("bench", help="Monte-Carlo benchmark from a plan file")
    sp.add_argument("--config", help="JSON config or manifest supplying defaults")
    sp.add_argument("--plan", help="experiment plan JSON")
    sp.add_argument("--out-dir", dest="out_dir", help="output directory")
    sp.add_argument("--threads", type=int)
    sp.add_argument("--check", action=argparse.BooleanOptionalAction, default=None,
                    help="exit 2 when reference cells are missed")
    sp.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    sp.set_defaults(handler=_cmd_bench)

    sp = subs.add_parser("dn-volume", help="volume of the hyperbolic domain")
    sp.add_argument("--config", help="JSON config supplying defaults")
    sp.add_argument("--n", type=float)
    sp.add_argument("--d", type=int)
    sp.add_argument("--out", help="optional JSON output path")
    sp.set_defaults(handler=_cmd_dn_volume)

    sp = subs.add_parser("rate", help="risk decay across sample sizes")
    _add_common(sp, sampling=True, threshold=True, figures=True)
    sp.add_argument("--n-values", dest="n_values", help="e.g. 1000,10000,100000")
    sp.add_argument("--replications", type=int)
    sp.add_argument("--threads", type=int)
    sp.set_defaults(handler=_cmd_rate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error category=usage: {exc}", file=sys.stderr)
        return 64
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return 64
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error category=config: {exc}", file=sys.stderr)
        return 65
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error category=config: {exc}", file=sys.stderr)
        return 65
    except Exception as exc:  # noqa: BLE001
        print(f"error category=runtime: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
