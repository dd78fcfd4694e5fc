"""Command-line driver.

    bbmlab [--config PATH] [--seed N] [--out DIR] [--jobs N] COMMAND ...

Commands: simulate, sweep, growth, identity-check, strichartz, plotdata.
Exit status: 0 pass, 1 fail, 2 usage or configuration error, 3 incomplete.
Every run directory ends with a ``manifest.json`` written last.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import ExperimentConfig, load_config
from .errors import BBMLabError, BlowUpError, ConfigurationError, InputError
from .evolve import evolve_to, initial_state
from .initial_data import make_initial, random_bandlimited
from .invariants import DEFAULT_C_GN, drift_report, h1_apriori_ceiling, monitor_h1
from .limit import (
    fit_growth,
    fit_rate,
    rate_threshold,
    run_pairs,
    run_sweep,
    strichartz_ratio,
    threshold_horizon,
    validity_horizon,
)
from .spectral import l2_norm, make_grid, sobolev_norm
from .symbols import check_identities

log = logging.getLogger("bbmlab")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3

_STATUS_CODES = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "incomplete": EXIT_INCOMPLETE}


class Run:
    """Bookkeeping for one output directory: files written, warnings, manifest."""

    def __init__(self, command: str, cfg: ExperimentConfig, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.warnings = []
        self.started = io.now_iso()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(str(p.relative_to(self.out)))
        return p

    def finish(self, status: str, **extra) -> int:
        manifest = {
            "command": self.command,
            "config_hash": io.config_hash(self.cfg.to_dict()),
            "seed": self.cfg.seed,
            "version": __version__,
            "started": self.started,
            "finished": io.now_iso(),
            "files": self.files,
            "warnings": self.warnings,
            "status": status,
            "exit_code": _STATUS_CODES[status],
        }
        manifest.update(extra)
        io.write_json(self.out / "manifest.json", manifest)
        return _STATUS_CODES[status]


def _eps_tag(eps: float) -> str:
    return f"eps_{eps!r}"


# simulate


def cmd_simulate(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    run = Run("simulate", cfg, out)
    grid = make_grid(cfg.grid.n, cfg.grid.length)
    model = cfg.model.build()
    u0 = make_initial(grid, cfg.initial_data.name, cfg.initial_data.params, seed=cfg.seed)
    stepper = cfg.stepper.build()
    try:
        result = evolve_to(initial_state(model, u0), cfg.simulate.T, stepper,
                            check_ceiling=cfg.stepper.enforce_ceiling)
    except ConfigurationError as exc:
        raise ConfigurationError(exc.message, f"stepper.{exc.path}" if exc.path else "stepper") from exc
    except BlowUpError as exc:
        run.warnings.append(f"blow-up at t={exc.time}: {exc}")
        return run.finish("incomplete", failure=str(exc), blowup_time=exc.time)

    run.warnings.extend(result.warnings)
    io.write_trace(run.path("trace.csv"), result.trace)
    io.write_csv(
        run.path("invariants.csv"),
        ["t", "e0", "e1", "e2"],
        ([t, *c.as_tuple()] for t, c in result.invariant_log),
    )
    drift = drift_report(result.invariant_log)
    R = sobolev_norm(u0, 1.0)
    monitor = monitor_h1(result.trace, h1_apriori_ceiling(R, DEFAULT_C_GN)) if R > 0 else None
    passed = all(v <= cfg.simulate.drift_tol for v in drift.values())
    io.write_json(
        run.path("run.json"),
        {
            "model": model.to_dict(),
            "grid": {"n": grid.n, "length": grid.length},
            "stepper": {"dt": stepper.dt, "dealias": stepper.dealias, "record_every": stepper.record_every},
            "T": cfg.simulate.T,
            "steps": result.state.step_count,
            "invariants": {"drift": drift, "tolerance": cfg.simulate.drift_tol, "passed": passed},
            "h1_monitor": None if monitor is None else {
                "R": R,
                "ceiling": monitor.ceiling,
                "sup_h1": monitor.sup_h1,
                "worst_ratio": monitor.worst_ratio,
                "worst_time": monitor.worst_time,
                "passed": monitor.passed,
            },
            "warnings": result.warnings,
        },
    )
    print(f"simulate: drift e0={drift['e0']:.3e} e1={drift['e1']:.3e} e2={drift['e2']:.3e}")
    return run.finish("pass" if passed else "fail")


# sweep


def _write_sweep(run: Run, rows, fit, threshold, complete, extra):
    io.write_csv(run.path("sweep.csv"), ["eps", "sup_error", "t_of_sup", "complete"], rows)
    verdict = bool(complete and fit is not None and fit.slope >= threshold)
    payload = {
        "fit": None if fit is None else fit.to_dict(),
        "threshold": threshold,
        "complete": complete,
        "verdict": verdict,
    }
    payload.update(extra)
    io.write_json(run.path("fit.json"), payload)
    if fit is not None:
        print(f"sweep: slope={fit.slope:.4f} threshold={threshold:.4f} verdict={'pass' if verdict else 'fail'}")
    if not complete:
        return "incomplete"
    return "pass" if verdict else "fail"


def cmd_sweep(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    run = Run("sweep", cfg, out)
    sw = cfg.sweep
    threshold = rate_threshold(sw.s)
    if sw.synthetic is not None:
        # Injected power law: no PDE, the fit must echo the exponent.
        eps = [float(e) for e in sw.eps_list]
        errs = [sw.synthetic.prefactor * e**sw.synthetic.exponent for e in eps]
        fit = fit_rate(list(zip(eps, errs)))
        rows = [[e, err, 0.0, 1] for e, err in zip(eps, errs)]
        status = _write_sweep(run, rows, fit, threshold, True, {"synthetic": True,
                              "injected_exponent": sw.synthetic.exponent})
        return run.finish(status)

    scfg = cfg.sweep_config()
    result = run_sweep(scfg, jobs=jobs)
    w0_norm = l2_norm(make_initial(scfg.grid, scfg.initial_data, scfg.initial_params, seed=scfg.seed))
    rows, failures, relative = [], {}, {}
    for tr in result.traces:
        sub = _eps_tag(tr.eps)
        if tr.complete:
            io.write_csv(run.path(f"{sub}/error.csv"), ["t", "error"], zip(tr.times, tr.errors))
            relative[repr(tr.eps)] = tr.sup_error / w0_norm if w0_norm > 0 else math.nan
        else:
            failures[repr(tr.eps)] = tr.failure
            run.warnings.append(f"eps={tr.eps}: {tr.failure}")
        rows.append([tr.eps, tr.sup_error, tr.t_of_sup, int(tr.complete)])
    status = _write_sweep(run, rows, result.fit, threshold, result.complete, {
        "synthetic": False,
        "failures": failures,
        "relative_sup_error": relative,
        "T": scfg.T,
        "s": scfg.s,
    })
    return run.finish(status)


# growth


def _horizon_key(h):
    return math.inf if h is None else h


def cmd_growth(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    run = Run("growth", cfg, out)
    g = cfg.growth
    scfg = cfg.sweep_config(eps_list=g.eps_list, T=g.T)
    traces = run_pairs(scfg, jobs=jobs)
    report = {}
    for tr in traces:
        if not tr.complete:
            run.warnings.append(f"eps={tr.eps}: {tr.failure}")
            report[repr(tr.eps)] = {"complete": False, "failure": tr.failure}
            continue
        io.write_csv(run.path(f"growth_{_eps_tag(tr.eps)}.csv"), ["t", "error"], zip(tr.times, tr.errors))
        fit = fit_growth(tr.times, tr.errors)
        report[repr(tr.eps)] = {
            "complete": True,
            "k_hat": fit.k_hat,
            "c_hat": fit.c_hat,
            "error_at_ref": float(np.interp(g.ref_time, tr.times, tr.errors)),
            "error_at_T": float(tr.errors[-1]),
            "validity_horizon": validity_horizon(tr.times, tr.errors, g.ref_time, g.factor),
            "threshold_horizon": threshold_horizon(tr.times, tr.errors, g.threshold),
        }
    complete = all(tr.complete for tr in traces)
    verdict = False
    if complete:
        # Horizon must grow strictly as eps decreases; "never crossed" counts as
        # beyond T, and two never-crossed traces are not an increase.
        hs = [_horizon_key(report[repr(tr.eps)]["validity_horizon"]) for tr in traces]
        verdict = all(b > a for a, b in zip(hs, hs[1:]))
    io.write_json(run.path("growth.json"), {
        "per_eps": report,
        "T": g.T,
        "ref_time": g.ref_time,
        "factor": g.factor,
        "threshold": g.threshold,
        "complete": complete,
        "verdict": verdict,
    })
    for key, r in report.items():
        if r["complete"]:
            print(f"growth: eps={key} k_hat={r['k_hat']:.4f} horizon={r['validity_horizon']} "
                  f"threshold_horizon={r['threshold_horizon']}")
    if not complete:
        return run.finish("incomplete")
    return run.finish("pass" if verdict else "fail")


# identity-check


def cmd_identity_check(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    run = Run("identity-check", cfg, out)
    ic = cfg.identity
    report = check_identities(cfg.seed, ic.sample_count, ic.eps_min, ic.xi_scale)
    io.write_csv(
        run.path("identity.csv"),
        ["identity", "max_residual", "tolerance", "passed"],
        ([name, r["max_residual"], r["tolerance"], r["passed"]] for name, r in report.items()),
    )
    io.write_json(run.path("identity.json"), {"sample_count": ic.sample_count, "identities": report})
    for name, r in report.items():
        print(f"{name}: {r['max_residual']:.3e} (tol {r['tolerance']:g}) {'ok' if r['passed'] else 'FAIL'}")
    return run.finish("pass" if all(r["passed"] for r in report.values()) else "fail")


# strichartz


def cmd_strichartz(cfg: ExperimentConfig, out: Path, jobs: int) -> int:
    run = Run("strichartz", cfg, out)
    sc = cfg.strichartz
    grid = make_grid(sc.n, sc.length)
    children = np.random.SeedSequence(cfg.seed).spawn(sc.ensemble_size)
    ensemble = [random_bandlimited(grid, rng=np.random.default_rng(c), **sc.data) for c in children]
    rows, summary, maxima = [], {}, []
    for eps in sc.eps_list:
        ratios = strichartz_ratio(eps, sc.q, sc.r, window=sc.window, samples=sc.samples, ensemble=ensemble)
        rows.extend([eps, i, r] for i, r in enumerate(ratios))
        maxima.append(max(ratios))
        summary[repr(float(eps))] = {"max": max(ratios), "mean": float(np.mean(ratios))}
        print(f"strichartz: eps={eps} max ratio={max(ratios):.4f}")
    io.write_csv(run.path("strichartz.csv"), ["eps", "member", "ratio"], rows)
    verdict = all(b <= sc.uniformity_factor * a for a, b in zip(maxima, maxima[1:]))
    io.write_json(run.path("strichartz.json"), {
        "q": sc.q,
        "r": sc.r,
        "ensemble_size": sc.ensemble_size,
        "per_eps": summary,
        "uniformity_factor": sc.uniformity_factor,
        "verdict": verdict,
    })
    return run.finish("pass" if verdict else "fail")


# plotdata


def _drift_series(values: np.ndarray) -> np.ndarray:
    ref = np.maximum(np.abs(values[0]), 1e-14)
    return (values - values[0]) / ref


def _maybe_render(path: Path, series, xlabel, ylabel, loglog=False, logy=False):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, x, y, style in series:
        ax.plot(x, y, style, label=label)
    if loglog:
        ax.set_xscale("log")
    if loglog or logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_plotdata(cfg: ExperimentConfig, out: Path, jobs: int, source: Path, svg: bool = False) -> int:
    source = Path(source)
    if not source.is_dir():
        raise InputError(f"{source} is not a directory")
    sweep_csv = source / "sweep.csv"
    growth_csvs = sorted(source.glob("growth_eps_*.csv"))
    inv_csv = source / "invariants.csv"
    if not (sweep_csv.is_file() or growth_csvs or inv_csv.is_file()):
        raise InputError(f"{source}: none of sweep.csv, growth_eps_*.csv, invariants.csv found")
    run = Run("plotdata", cfg, out)

    if sweep_csv.is_file():
        _, data = io.read_csv(sweep_csv)
        done = data[data[:, 3] > 0] if data.shape[1] > 3 else data
        eps, err = done[:, 0], done[:, 1]
        io.write_columns(run.path("loglog.dat"), [eps, err], "eps sup_error")
        fit = io.read_json(source / "fit.json").get("fit") if (source / "fit.json").is_file() else None
        series = [("sup error", eps, err, "o")]
        if fit is not None:
            line = np.exp(fit["intercept"]) * eps ** fit["slope"]
            io.write_columns(run.path("loglog_fit.dat"), [eps, line], f"eps fitted slope={fit['slope']!r}")
            series.append(("fit", eps, line, "-"))
        if svg:
            _maybe_render(run.path("loglog.svg"), series, "eps", "sup error", loglog=True)

    if growth_csvs:
        growth = source / "growth.json"
        per_eps = io.read_json(growth)["per_eps"] if growth.is_file() else {}
        for path in growth_csvs:
            key = path.stem[len("growth_eps_"):]
            _, data = io.read_csv(path)
            t, e = data[:, 0], data[:, 1]
            io.write_columns(run.path(f"growth_{key}.dat"), [t, e], "t error")
            series = [("error", t, e, "-")]
            info = per_eps.get(key)
            if info and info.get("complete"):
                env = info["c_hat"] * np.exp(info["k_hat"] * t)
                io.write_columns(run.path(f"envelope_{key}.dat"), [t, env], f"t c*exp(k t) k={info['k_hat']!r}")
                series.append(("envelope", t, env, "--"))
            if svg:
                _maybe_render(run.path(f"growth_{key}.svg"), series, "t", "error", logy=True)

    if inv_csv.is_file():
        _, data = io.read_csv(inv_csv)
        t = data[:, 0]
        drift = _drift_series(data[:, 1:])
        series = []
        for j, name in enumerate(("e0", "e1", "e2")):
            io.write_columns(run.path(f"drift_{name}.dat"), [t, drift[:, j]], f"t relative drift of {name}")
            series.append((name, t, drift[:, j], "-"))
        if svg:
            _maybe_render(run.path("drift.svg"), series, "t", "relative drift")

    return run.finish("pass")


# argument handling


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "growth": cmd_growth,
    "identity-check": cmd_identity_check,
    "strichartz": cmd_strichartz,
    "plotdata": cmd_plotdata,
}


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="YAML experiment config")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--jobs", type=int, default=default if suppress else 1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbmlab", description="BBM_eps / KdV spectral lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _global_flags(p, suppress=True)
        if name == "identity-check":
            p.add_argument("--samples", type=int, help="override identity.sample_count")
        if name == "plotdata":
            p.add_argument("run_dir", type=Path, help="directory produced by simulate, sweep or growth")
            p.add_argument("--svg", action="store_true", help="also render SVG figures (needs matplotlib)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "samples", None) is not None:
            cfg.identity.sample_count = args.samples
            cfg.identity.validate("identity")
        if args.jobs is not None and args.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1", "jobs")
        out = args.out if args.out is not None else Path("runs") / args.command
        jobs = args.jobs or 1
        if args.command == "plotdata":
            return cmd_plotdata(cfg, out, jobs, args.run_dir, args.svg)
        return COMMANDS[args.command](cfg, out, jobs)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BBMLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
