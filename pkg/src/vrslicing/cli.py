"""Command-line front end: scenario sweeps, MC validation and CSV output.

Every command writes one CSV table, preceded by '#' comment lines that
record the command, schema version, RNG algorithm and the fully resolved
configuration, so a file can be regenerated from its own header.

Exit codes: 0 success, 1 infeasible problem, 2 config or I/O error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import __version__, analytic
from . import montecarlo as mc
from .config import ScenarioConfig, load_config
from .errors import ConfigError, InfeasibleError, SlicingError
from .optimizer import (
    ProblemP1,
    Scheme,
    Search,
    compare_sic_orders,
    crossover_theta,
    solve_p1,
    design_at,
)
from .perception import JndTargets, eta2_feasible_range

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3
LN2 = math.log(2.0)
# where the table goes does not change what is in it
PROVENANCE_SKIP = {"output.path"}

COLUMNS = {
    "coverage": ["t", "bound_lower_c", "bound_upper_c", "exact", "mc_value", "mc_half_width", "seed"],
    "optimize": ["scheme", "search", "theta", "r1_target", "eta2", "eta1", "resource_split_1",
                 "resource_split_2", "t1", "t2", "rate1", "rate2", "rate2_bits", "p1", "p2", "evaluations"],
    "sweep-eta2": ["scheme", "theta", "eta2", "eta1", "resource_split", "t1", "t2", "rate2", "rate2_bits"],
    "sweep-r1": ["scheme", "theta", "r1_target", "eta2", "eta1", "resource_split", "t1", "t2", "rate2",
                 "rate2_bits", "rate2_closed_form", "rate2_grid_search", "rate2_power_order_sic",
                 "closed_form_gap"],
    "sweep-theta": ["kind", "r1_target", "scheme", "theta", "rate2", "rate2_bits", "theta_star",
                    "dominating", "sign_changes"],
    "simulate": ["scheme", "search", "rate1_analytic", "rate1_mc", "rate1_half_width", "rate2_analytic",
                 "rate2_mc", "rate2_half_width", "rate2_bits", "n", "seed"],
    "validate": ["check", "case", "analytic", "mc_value", "mc_half_width", "n", "seed", "within_ci",
                 "ci_too_wide"],
    "crossover": ["r1_target", "status", "theta_star", "dominating", "bracket_lo", "bracket_hi",
                  "sign_changes", "theta_min", "theta_max"],
}


# --------------------------------------------------------------------------
# formatting


def fmt(value) -> str:
    """Deterministic cell text: shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


class Table:
    def __init__(self, command: str, cfg: ScenarioConfig, notes: list[str] | None = None):
        self.command = command
        self.cfg = cfg
        self.columns = COLUMNS[command]
        self.rows: list[list] = []
        self.notes = list(notes or [])

    def add(self, **row):
        extra = set(row) - set(self.columns)
        if extra:
            raise KeyError(f"unknown columns {sorted(extra)}")
        self.rows.append([row.get(c) for c in self.columns])

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(f"# vrslicing {__version__} command={self.command}\n")
        buf.write(f"# schema={self.command}/v{SCHEMA_VERSION}\n")
        buf.write(f"# rng={mc.RNG_ALGORITHM}\n")
        buf.write("# units: rates in nats per normalized bandwidth; *_bits columns divide by ln 2\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        for key, value in self.cfg.items():
            if key in PROVENANCE_SKIP:
                continue
            text = "[" + ", ".join(fmt(v) for v in value) + "]" if isinstance(value, list) else fmt(value)
            buf.write(f"# config {key} = {text}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()


def _write(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from None


def _pmap(fn, items, workers: int):
    """Map in input order; threads when workers > 1."""
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _schemes(choice: str) -> list[Scheme]:
    return [Scheme.OMA, Scheme.NOMA] if choice == "both" else [Scheme(choice)]


def _problem(cfg: ScenarioConfig, r1: float | None = None, theta: float | None = None) -> ProblemP1:
    jnd = cfg.jnd if theta is None else JndTargets(theta, cfg["targets.eta2_floor"])
    return ProblemP1(cfg.network, cfg["targets.r1"] if r1 is None else r1, jnd)


def _logspace(lo: float, hi: float, n: int) -> list[float]:
    if n <= 0:
        return []
    if n == 1:
        return [lo]
    return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), n)]


def _bits(rate):
    return None if rate is None else rate / LN2


# --------------------------------------------------------------------------
# analytic rates under the exact coverage law (reference for MC)


def exact_rates(params: analytic.NetworkParams, design) -> tuple[float, float]:
    """Rates of a fixed design with success probabilities from the exact coverage."""
    t1, t2 = design.t1_star, design.t2_star
    if design.scheme is Scheme.OMA:
        w = design.split
        return (w.w1 * analytic.coverage_exact(params, t1) * math.log1p(t1),
                w.w2 * analytic.coverage_exact(params, t2) * math.log1p(t2))
    split = design.split
    p1 = analytic.noma_p1(params, split, t1, "exact")
    p2 = analytic.noma_p2(params, split, t1, t2, analytic.P2Mode.EXACT, "exact")
    return p1 * math.log1p(t1), p2 * math.log1p(t2)


# --------------------------------------------------------------------------
# commands


def cmd_coverage(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    params = cfg.network
    lower, upper = params.with_c_mode("lower"), params.with_c_mode("upper")
    ts = _logspace(cfg["coverage.t_min"], cfg["coverage.t_max"], cfg["coverage.points"])
    table = Table("coverage", cfg)
    if not ts:
        return table, EXIT_OK
    estimates = mc.estimate_coverage(params, cfg.mc, ts)
    for t, est in zip(ts, estimates):
        table.add(t=t, bound_lower_c=float(analytic.coverage_bound(lower, t)),
                  bound_upper_c=float(analytic.coverage_bound(upper, t)),
                  exact=float(analytic.coverage_exact(params, t)),
                  mc_value=est.value, mc_half_width=est.half_width, seed=est.seed)
    return table, EXIT_OK


def cmd_optimize(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    problem = _problem(cfg)
    table = Table("optimize", cfg)
    for scheme in _schemes(args.scheme):
        for search in (Search.CLOSED_FORM, Search.GRID_REFINE):
            sol = solve_p1(problem, scheme, search, cfg.coverage_model)
            d, r = sol.design, sol.rates
            s1, s2 = d.resource_split
            table.add(scheme=scheme, search=search, theta=problem.theta, r1_target=problem.r1_target,
                      eta2=d.eta2, eta1=d.eta1, resource_split_1=s1, resource_split_2=s2, t1=d.t1_star,
                      t2=d.t2_star, rate1=r.rate1, rate2=r.rate2, rate2_bits=_bits(r.rate2), p1=r.p1, p2=r.p2,
                      evaluations=sol.evaluations)
    return table, EXIT_OK


def cmd_sweep_eta2(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    table = Table("sweep-eta2", cfg, ["resource_split is the Link-1 share (w1 under OMA, beta1 under NOMA)",
                                      "infeasible grid points carry empty cells"])
    n, model = cfg["sweep.points"], cfg.coverage_model
    jobs = []
    for theta in cfg["sweep.thetas"]:
        problem = _problem(cfg, theta=theta)
        top = eta2_feasible_range(theta, cfg["sweep.eta2_min"]).hi - 1e-9
        if cfg["sweep.eta2_max"] is not None:
            top = min(top, cfg["sweep.eta2_max"])
        grid = [float(x) for x in np.linspace(cfg["sweep.eta2_min"], top, n)] if top > cfg["sweep.eta2_min"] else []
        for scheme in _schemes(args.scheme):
            jobs.extend((problem, scheme, eta2) for eta2 in grid)

    def run(job):
        problem, scheme, eta2 = job
        try:
            return design_at(problem, scheme, eta2, model)
        except InfeasibleError:
            return None

    for (problem, scheme, eta2), out in zip(jobs, _pmap(run, jobs, cfg["mc.workers"])):
        if out is None:
            table.add(scheme=scheme, theta=problem.theta, eta2=eta2)
            continue
        d, r = out
        table.add(scheme=scheme, theta=problem.theta, eta2=eta2, eta1=d.eta1, resource_split=d.resource_split[0],
                  t1=d.t1_star, t2=d.t2_star, rate2=r.rate2, rate2_bits=_bits(r.rate2))
    return table, EXIT_OK


def cmd_sweep_r1(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    table = Table("sweep-r1", cfg, [
        "design columns describe the grid-search optimum; resource_split is the Link-1 share",
        "closed_form_gap = (rate2_grid_search - rate2_closed_form) / rate2_grid_search",
        "rate2_power_order_sic is evaluated on the grid-search NOMA design (empty for OMA)",
        "infeasible grid points carry empty cells",
    ])
    model = cfg.coverage_model
    jobs = [(r1, scheme) for scheme in _schemes(args.scheme)
            for r1 in _logspace(cfg["sweep.r1_min"], cfg["sweep.r1_max"], cfg["sweep.points"])]

    def run(job):
        r1, scheme = job
        problem = _problem(cfg, r1=r1)
        try:
            closed = solve_p1(problem, scheme, Search.CLOSED_FORM, model)
            grid = solve_p1(problem, scheme, Search.GRID_REFINE, model)
        except InfeasibleError:
            return None
        power = compare_sic_orders(problem, grid.design, model)[1] if scheme is Scheme.NOMA else None
        return closed, grid, power

    theta = cfg["targets.theta"]
    for (r1, scheme), out in zip(jobs, _pmap(run, jobs, cfg["mc.workers"])):
        if out is None:
            table.add(scheme=scheme, theta=theta, r1_target=r1)
            continue
        closed, grid, power = out
        d, rg, rc = grid.design, grid.rates.rate2, closed.rates.rate2
        gap = (rg - rc) / rg if rg > 0 else 0.0
        table.add(scheme=scheme, theta=theta, r1_target=r1, eta2=d.eta2, eta1=d.eta1,
                  resource_split=d.resource_split[0], t1=d.t1_star, t2=d.t2_star, rate2=rg, rate2_bits=_bits(rg),
                  rate2_closed_form=rc, rate2_grid_search=rg, rate2_power_order_sic=power, closed_form_gap=gap)
    return table, EXIT_OK


def _crossovers(cfg: ScenarioConfig):
    rng = (cfg["sweep.theta_min"], cfg["sweep.theta_max"])

    def run(r1):
        try:
            return crossover_theta(cfg.network, r1, rng, cfg["targets.eta2_floor"], model=cfg.coverage_model)
        except InfeasibleError as exc:
            return exc

    r1s = list(cfg["sweep.r1_values"])
    return list(zip(r1s, _pmap(run, r1s, cfg["mc.workers"])))


def cmd_sweep_theta(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    table = Table("sweep-theta", cfg, ["kind=rate rows give the optimal eMBB rate; kind=crossover rows give theta*",
                                       "infeasible grid points carry empty cells"])
    model = cfg.coverage_model
    thetas = _logspace(cfg["sweep.theta_min"], cfg["sweep.theta_max"], cfg["sweep.points"])
    jobs = [(r1, scheme, theta) for r1 in cfg["sweep.r1_values"] for scheme in _schemes(args.scheme)
            for theta in thetas]

    def run(job):
        r1, scheme, theta = job
        try:
            return solve_p1(_problem(cfg, r1=r1, theta=theta), scheme, Search.GRID_REFINE, model).rates.rate2
        except InfeasibleError:
            return None

    for (r1, scheme, theta), rate in zip(jobs, _pmap(run, jobs, cfg["mc.workers"])):
        table.add(kind="rate", r1_target=r1, scheme=scheme, theta=theta, rate2=rate, rate2_bits=_bits(rate))
    for r1, res in _crossovers(cfg):
        if isinstance(res, Exception):
            table.add(kind="crossover", r1_target=r1)
        else:
            table.add(kind="crossover", r1_target=r1, theta_star=res.theta_star, dominating=res.dominating,
                      sign_changes=res.sign_changes)
    return table, EXIT_OK


def cmd_crossover(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    table = Table("crossover", cfg, ["theta_star: largest theta below which NOMA beats OMA (last sign change)"])
    lo, hi = cfg["sweep.theta_min"], cfg["sweep.theta_max"]
    for r1, res in _crossovers(cfg):
        if isinstance(res, Exception):
            print(f"vrslicing: r1={r1}: {res}", file=sys.stderr)
            table.add(r1_target=r1, status="no_crossover", theta_min=lo, theta_max=hi)
            continue
        table.add(r1_target=r1, status="dominating" if res.dominating else "ok", theta_star=res.theta_star,
                  dominating=res.dominating, bracket_lo=res.bracket[0], bracket_hi=res.bracket[1],
                  sign_changes=res.sign_changes, theta_min=lo, theta_max=hi)
    return table, EXIT_OK


def cmd_simulate(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    params, config = cfg.network, cfg.mc
    problem = _problem(cfg)
    table = Table("simulate", cfg, ["analytic columns use the exact coverage law for the design's fixed thresholds"])
    for scheme in _schemes(args.scheme):
        for search in (Search.CLOSED_FORM, Search.GRID_REFINE):
            design = solve_p1(problem, scheme, search, cfg.coverage_model).design
            a1, a2 = exact_rates(params, design)
            e1, e2 = mc.estimate_rates(params, config, design)
            table.add(scheme=scheme, search=search, rate1_analytic=a1, rate1_mc=e1.value, rate1_half_width=e1.half_width,
                      rate2_analytic=a2, rate2_mc=e2.value, rate2_half_width=e2.half_width,
                      rate2_bits=_bits(e2.value), n=e2.n, seed=e2.seed)
    return table, EXIT_OK


def validation_checks(cfg: ScenarioConfig) -> list[tuple[str, str, float, mc.McEstimate]]:
    """Analytic-vs-MC pairs: (check, case, analytic value, estimate)."""
    params, config = cfg.network, cfg.mc
    problem = _problem(cfg)
    out = []

    ts = [0.1, 1.0, 10.0]
    for t, est in zip(ts, mc.estimate_coverage(params, config, ts)):
        out.append(("coverage", f"t={fmt(t)}", float(analytic.coverage_exact(params, t)), est))

    oma = solve_p1(problem, Scheme.OMA, Search.CLOSED_FORM, cfg.coverage_model).design
    for link, t, est in zip((1, 2), (oma.t1_star, oma.t2_star),
                            mc.estimate_oma_success(params, config, oma.t1_star, oma.t2_star)):
        out.append(("oma_success", f"link={link} t={fmt(t)}", float(analytic.coverage_exact(params, t)), est))

    noma = solve_p1(problem, Scheme.NOMA, Search.CLOSED_FORM, cfg.coverage_model).design
    split = noma.split
    t1s = [split.ceiling * f for f in (0.1, 0.3, 0.5, 0.7, 0.9)]
    t2s = [split.beta2 * x for x in (0.05, 0.2, 0.5, 1.0, 2.0)]
    p1s, p2s = mc.estimate_noma_grid(params, config, split, t1s, t2s)
    for i, t1 in enumerate(t1s):
        out.append(("noma_p1", f"t1={fmt(t1)}", analytic.noma_p1(params, split, t1, "exact"), p1s[i]))
        for j, t2 in enumerate(t2s):
            exact = analytic.noma_p2(params, split, t1, t2, analytic.P2Mode.EXACT, "exact")
            out.append(("noma_p2_joint", f"t1={fmt(t1)} t2={fmt(t2)}", exact, p2s[i][j]))

    for design in (oma, noma):
        exact = exact_rates(params, design)
        for link, a, est in zip((1, 2), exact, mc.estimate_rates(params, config, design)):
            out.append((f"{design.scheme.value}_rate", f"link={link}", a, est))
    return out


def cmd_validate(cfg: ScenarioConfig, args) -> tuple[Table, int]:
    checks = validation_checks(cfg)
    m = len(checks)
    config = cfg.mc
    # family-wise level: Bonferroni over all m intervals
    z_family = float(norm.ppf(1.0 - 0.5 * (1.0 - config.confidence_level) / m))
    widen = z_family / config.z
    table = Table("validate", cfg, [
        f"ci: normal approximation, family-wise level {fmt(config.confidence_level)} (Bonferroni over {m} checks)",
        f"ci_too_wide: n < {mc.MIN_PUBLISHED_SAMPLES} or half-width > validate.max_half_width; such rows never fail",
    ])
    failures, wide = 0, 0
    for check, case, value, est in checks:
        half = est.half_width * widen
        within = est.value - half <= value <= est.value + half
        too_wide = est.n < mc.MIN_PUBLISHED_SAMPLES or half > cfg["validate.max_half_width"]
        wide += too_wide
        failures += not within and not too_wide
        table.add(check=check, case=case, analytic=value, mc_value=est.value, mc_half_width=half, n=est.n,
                  seed=est.seed, within_ci=within, ci_too_wide=too_wide)
    if wide:
        print(f"vrslicing: warning: {wide} of {m} intervals too wide to be conclusive "
              f"(n={config.n_samples}); see ci_too_wide column", file=sys.stderr)
    if failures:
        print(f"vrslicing: validation failed: {failures} of {m} analytic values outside their CI", file=sys.stderr)
        return table, EXIT_VALIDATION
    return table, EXIT_OK


COMMANDS = {
    "coverage": (cmd_coverage, "coverage bounds, exact law and MC estimate over a threshold grid"),
    "optimize": (cmd_optimize, "solve the slicing problem at the configured targets"),
    "sweep-eta2": (cmd_sweep_eta2, "eMBB rate against the eMBB reliability eta2"),
    "sweep-r1": (cmd_sweep_r1, "optimal eMBB rate against the URLLC rate target"),
    "sweep-theta": (cmd_sweep_theta, "optimal eMBB rate against the JND target, with crossover rows"),
    "simulate": (cmd_simulate, "MC rates of the optimized designs next to their analytic values"),
    "validate": (cmd_validate, "full analytic-vs-MC suite; exit 3 on any CI violation"),
    "crossover": (cmd_crossover, "JND threshold where NOMA stops beating OMA, per URLLC target"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrslicing", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="scenario TOML file (flat dotted keys)")
        p.add_argument("--out", help="output CSV path, '-' for stdout (overrides output.path)")
        p.add_argument("--seed", type=int, help="MC seed (overrides mc.seed)")
        p.add_argument("--samples", type=int, help="MC sample count (overrides mc.samples)")
        p.add_argument("--scheme", choices=("oma", "noma", "both"), default="both")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["mc__seed"] = args.seed
        if args.samples is not None:
            overrides["mc__samples"] = args.samples
        if args.out is not None:
            overrides["output__path"] = args.out
        if overrides:
            cfg = cfg.override(**overrides)
        fn = COMMANDS[args.command][0]
        table, code = fn(cfg, args)
        _write(table.render(), cfg["output.path"])
        return code
    except InfeasibleError as exc:
        print(f"vrslicing: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SlicingError as exc:
        print(f"vrslicing: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
