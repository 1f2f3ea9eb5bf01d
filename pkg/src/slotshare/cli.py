"""Experiment command line: equilibrium tables, Monte Carlo runs, sweeps.

Subcommands mirror the evaluation protocol: ``msne`` and ``stage`` print
stage-game tables, ``simulate`` runs repeated-game Monte Carlo, ``freq``
collects the equilibrium access-frequency statistics, ``gain`` compares
cooperation against competition, and ``region`` sweeps the
(discount, device-bias) grid for self-enforceability.  CSV output carries 17
significant digits so reruns can be compared byte for byte; all output is
written once at the end.

Exit codes: 0 success, 2 configuration error, 3 numeric-regime error
(equilibrium formula left [0, 1]), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace

from . import equilibrium as eq
from . import etiquette, sim
from .config import ExperimentConfig, default_config, parse_config
from .model import ConfigurationError
from .equilibrium import OutOfRangeError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

SIMULATE_COLUMNS = [
    "mode",
    "N_A",
    "N_T",
    "sigma_C_ratio",
    "alpha",
    "p_r",
    "n_runs",
    "n_stages",
    "seed",
    "U_aon_mean",
    "U_aon_se",
    "U_ton_mean",
    "U_ton_se",
    "f_tau1_mean",
    "f_tau0_mean",
]

REGION_COLUMNS = [
    "alpha",
    "p_r",
    "ton_prefers",
    "aon_prefers",
    "spe",
    "indeterminate",
    "margin_aon_h",
    "se_aon_h",
    "margin_ton_h",
    "se_ton_h",
    "margin_aon_t",
    "se_aon_t",
    "margin_ton_t",
    "se_ton_t",
]

GAIN_COLUMNS = [
    "alpha",
    "p_r",
    "gain_aon",
    "gain_ton",
    "U_aon_competitive",
    "U_ton_competitive",
    "U_aon_cooperative",
    "U_ton_cooperative",
]

FREQ_COLUMNS = [
    "N_A",
    "N_T",
    "sigma_C_ratio",
    "alpha",
    "n_runs",
    "n_stages",
    "seed",
    "f_tau1_mean",
    "f_tau1_se",
    "f_tau0_mean",
    "f_tau0_se",
]


def _g17(value) -> str:
    return format(float(value), ".17g")


def _csv_text(columns, rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return out.getvalue()


def _sigma_ratio(config: ExperimentConfig) -> float:
    slots = config.scenario.slots
    return slots.collision / slots.success


def cmd_msne(config: ExperimentConfig) -> str:
    """Equilibrium access probabilities and thresholds for each listed age."""
    scen = config.scenario
    lines = [
        f"{'age':>12} {'tau_aon':>12} {'tau_ton':>12} {'th0':>12} {'th1':>12} {'th':>12}  regime"
    ]
    for age in config.ages:
        profile, th = eq.msne(scen.sizes, scen.slots, age)
        lines.append(
            f"{age:>12.6g} {profile.tau_aon:>12.6g} {profile.tau_ton:>12.6g} "
            f"{th.th0:>12.6g} {th.th1:>12.6g} {th.th:>12.6g}  {th.regime.value}"
        )
    return "\n".join(lines) + "\n"


def cmd_stage(config: ExperimentConfig) -> str:
    """Expected stage payoffs at the equilibrium and the cooperative optimum."""
    scen = config.scenario
    lines = [
        f"{'age':>12} {'mode':>12} {'tau_aon':>12} {'tau_ton':>12} {'u_aon':>14} {'u_ton':>14}"
    ]
    for age in config.ages:
        nash, _ = eq.msne(scen.sizes, scen.slots, age)
        pay = eq.expected_stage_payoffs(scen.sizes, scen.slots, nash, age, scen.rate)
        lines.append(
            f"{age:>12.6g} {'compete':>12} {nash.tau_aon:>12.6g} {nash.tau_ton:>12.6g} "
            f"{pay.u_aon:>14.6g} {pay.u_ton:>14.6g}"
        )
        coop, _ = eq.cooperative_optimum(scen.sizes, scen.slots, age)
        pay = eq.expected_stage_payoffs(
            scen.sizes, scen.slots, coop, age, scen.rate, p_r=scen.p_r
        )
        lines.append(
            f"{age:>12.6g} {'cooperate':>12} {coop.tau_aon:>12.6g} {coop.tau_ton:>12.6g} "
            f"{pay.u_aon:>14.6g} {pay.u_ton:>14.6g}"
        )
    return "\n".join(lines) + "\n"


def cmd_simulate(config: ExperimentConfig, mode: sim.Mode) -> str:
    """Monte Carlo repeated game in one mode; one CSV row."""
    scen = config.scenario
    run_config = sim.RunConfig(scen, config.n_stages, mode, config.master_seed)
    agg = sim.monte_carlo(run_config, config.n_runs, threads=config.threads)
    row = [
        mode.value,
        scen.sizes.n_aon,
        scen.sizes.n_ton,
        _g17(_sigma_ratio(config)),
        _g17(scen.alpha),
        _g17(scen.p_r),
        config.n_runs,
        config.n_stages,
        config.master_seed,
        _g17(agg.u_aon_mean),
        _g17(agg.u_aon_se),
        _g17(agg.u_ton_mean),
        _g17(agg.u_ton_se),
        _g17(agg.freq_tau_one_mean),
        _g17(agg.freq_tau_zero_mean),
    ]
    return _csv_text(SIMULATE_COLUMNS, [row])


def cmd_region(config: ExperimentConfig) -> str:
    """Self-enforceability sweep over the (alpha, device-bias) grid."""
    scen = config.scenario
    grid = etiquette.region_sweep(
        scen,
        config.alpha_grid,
        config.pr_grid,
        config.n_runs,
        config.n_stages,
        config.master_seed,
        threads=config.threads,
    )
    rows = []
    for i, alpha in enumerate(grid.alpha_axis):
        for j, p_r in enumerate(grid.pr_axis):
            tri = (
                int(grid.ton_prefers[i, j]),
                int(grid.aon_prefers[i, j]),
                int(grid.self_enforceable[i, j]),
            )
            row = [_g17(alpha), _g17(p_r), *tri, int(any(v == -1 for v in tri))]
            for k in range(4):
                row += [_g17(grid.margins[k, i, j]), _g17(grid.ses[k, i, j])]
            rows.append(row)
    return _csv_text(REGION_COLUMNS, rows)


def cmd_gain(config: ExperimentConfig, self_test: bool = False) -> str:
    """Gain of cooperation over competition across the alpha and bias grids."""
    scen = config.scenario
    rows = []
    baseline = sim.Mode.COOPERATIVE if self_test else sim.Mode.COMPETITIVE
    for alpha in config.alphas:
        for p_r in config.pr_grid:
            result = sim.gain_of_cooperation(
                scen,
                config.n_runs,
                config.n_stages,
                config.master_seed,
                alpha=float(alpha),
                p_r=float(p_r),
                threads=config.threads,
                baseline_mode=baseline,
            )
            rows.append(
                [
                    _g17(alpha),
                    _g17(p_r),
                    _g17(result.gain_aon),
                    _g17(result.gain_ton),
                    _g17(result.competitive.u_aon_mean),
                    _g17(result.competitive.u_ton_mean),
                    _g17(result.cooperative.u_aon_mean),
                    _g17(result.cooperative.u_ton_mean),
                ]
            )
    return _csv_text(GAIN_COLUMNS, rows)


def cmd_freq(config: ExperimentConfig) -> str:
    """Competitive access-frequency statistics versus the AON size."""
    scen = config.scenario
    rows = []
    for n_aon in config.n_aon_list:
        params = replace(scen, sizes=replace(scen.sizes, n_aon=int(n_aon)))
        run_config = sim.RunConfig(params, config.n_stages, sim.Mode.COMPETITIVE, config.master_seed)
        agg = sim.monte_carlo(run_config, config.n_runs, threads=config.threads)
        rows.append(
            [
                int(n_aon),
                params.sizes.n_ton,
                _g17(_sigma_ratio(config)),
                _g17(params.alpha),
                config.n_runs,
                config.n_stages,
                config.master_seed,
                _g17(agg.freq_tau_one_mean),
                _g17(agg.freq_tau_one_se),
                _g17(agg.freq_tau_zero_mean),
                _g17(agg.freq_tau_zero_se),
            ]
        )
    return _csv_text(FREQ_COLUMNS, rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slotshare", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("msne", "equilibrium table for a list of ages"),
        ("stage", "expected stage payoffs at equilibrium and cooperative optimum"),
        ("simulate", "Monte Carlo repeated game (CSV)"),
        ("region", "(alpha, device-bias) self-enforceability sweep (CSV)"),
        ("gain", "gain of cooperation over competition (CSV)"),
        ("freq", "equilibrium access-frequency statistics (CSV)"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="INI config file path")
        cmd.add_argument("--seed", type=int, help="master seed override")
        cmd.add_argument("--runs", type=int, help="Monte Carlo runs override")
        cmd.add_argument("--stages", type=int, help="stages per run override")
        cmd.add_argument("--threads", type=int, help="worker threads override")
        cmd.add_argument(
            "--paper-scale",
            action="store_true",
            help="use the full evaluation scale (100000 runs x 1000 stages)",
        )
        cmd.add_argument("--out", help="output path (default: stdout)")
        if name == "simulate":
            cmd.add_argument(
                "--mode",
                choices=[m.value for m in sim.Mode],
                required=True,
            )
        if name == "gain":
            cmd.add_argument(
                "--self-test",
                action="store_true",
                help="compare cooperation against itself (gains must be zero)",
            )
    return parser


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else default_config()
    if args.paper_scale:
        config = config.at_paper_scale()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    if args.stages is not None:
        overrides["n_stages"] = args.stages
    if args.threads is not None:
        overrides["threads"] = args.threads
    return replace(config, **overrides) if overrides else config


def _dispatch(args) -> str:
    config = _load_config(args)
    if args.command == "msne":
        return cmd_msne(config)
    if args.command == "stage":
        return cmd_stage(config)
    if args.command == "simulate":
        return cmd_simulate(config, sim.Mode(args.mode))
    if args.command == "region":
        return cmd_region(config)
    if args.command == "gain":
        return cmd_gain(config, self_test=args.self_test)
    return cmd_freq(config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _dispatch(args)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OutOfRangeError as err:
        print(f"numeric-regime error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigurationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
