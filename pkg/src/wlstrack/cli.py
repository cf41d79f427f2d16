"""Command line front end.

Subcommands: simulate, sweep, bounds, gamma-star, replay, verify.
Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure
(non-SPD weighting matrix, rank deficiency), 4 I/O error.  All output is
deterministic given the inputs; seeds live in the scenario files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, io, simulation
from .estimator import EstimatorConfig, EstimatorState, MeasurementBatch, initial_state, update
from .verification import run_verification

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fobj:
        return json.load(fobj)


def _load_scenario(path: str) -> simulation.ScenarioConfig:
    return io.scenario_from_dict(_load_json(path))


def _probe_tau(scenario: simulation.ScenarioConfig, ensemble) -> int:
    """Observability window of the first run's member sequence."""
    run0 = simulation.seed_for_run(scenario, 0)
    sequence = simulation.generate_sequence(
        ensemble,
        scenario.horizon,
        scenario.sequence_policy,
        simulation.derive_seed(run0, 0),
        window=scenario.effective_window if scenario.sequence_policy == "window" else None,
    )
    tau = analysis.observability_window(sequence, ensemble)
    if tau is None:
        raise np.linalg.LinAlgError(
            "no window of the generated sequence reaches joint full rank; "
            "the error bounds do not apply (try the 'window' sequence policy)"
        )
    return tau


def _parse_gammas(text: str) -> list[float]:
    try:
        gammas = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"could not parse gamma list {text!r}") from None
    if not gammas:
        raise ValueError("gamma list is empty")
    if any(not np.isfinite(g) or g <= 0 for g in gammas):
        raise ValueError("all gammas must be positive and finite")
    return gammas


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.config)
    ensemble = simulation.build_ensemble(scenario)
    tau = _probe_tau(scenario, ensemble)
    psi_value = analysis.psi(ensemble, scenario.gamma)
    consts = analysis.ensemble_constants(ensemble)
    print(
        f"# psi={psi_value:.6g} tau={tau} lambda_bar={consts.lambda_bar:.6g} c={consts.c:.6g}",
        file=sys.stderr,
    )
    summary = simulation.monte_carlo(scenario, n_jobs=args.jobs)
    with open(args.out, "w", encoding="utf-8") as fobj:
        io.write_mc_summary_csv(summary, fobj)
    if args.dump_measurements or args.dump_estimates:
        run0 = simulation.simulate_run(
            scenario, simulation.seed_for_run(scenario, 0), ensemble=ensemble, keep_details=True
        )
        if args.dump_measurements:
            batches = []
            for t in range(1, scenario.horizon + 1):
                A, Q = ensemble.members[run0.member_indices[t - 1]]
                y = A @ run0.states[t] + run0.noises[t - 1]
                batches.append(MeasurementBatch(t, y, A, Q))
            with open(args.dump_measurements, "w", encoding="utf-8") as fobj:
                io.write_batches_jsonl(batches, fobj)
        if args.dump_estimates:
            with open(args.dump_estimates, "w", encoding="utf-8") as fobj:
                io.write_estimates_header(fobj, scenario.n_states)
                for t in range(1, scenario.horizon + 1):
                    io.write_estimates_row(fobj, t, run0.estimates[t])
    if args.dump_runs:
        with open(args.dump_runs, "w", encoding="utf-8") as fobj:
            results = (
                simulation.simulate_run(scenario, simulation.seed_for_run(scenario, i), ensemble=ensemble)
                for i in range(scenario.n_runs)
            )
            io.write_run_results_jsonl(results, fobj)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args.config)
    gammas = _parse_gammas(args.gammas)
    summaries = [
        simulation.monte_carlo(scenario.with_gamma(g), n_jobs=args.jobs) for g in gammas
    ]
    use_rms = scenario.noise.kind == "gaussian"
    with open(args.out, "w", encoding="utf-8") as fobj:
        io.write_sweep_csv(gammas, summaries, fobj, use_rms=use_rms)
    return EXIT_OK


def cmd_bounds(args) -> int:
    payload = _load_json(args.input)
    if isinstance(payload, dict) and "members" in payload:
        ensemble = io.ensemble_from_dict(payload)
        delta_x = 1.0 if args.delta_x is None else args.delta_x
        delta_n = 1.0 if args.delta_n is None else args.delta_n
        if args.tau is not None:
            tau = args.tau
        else:
            round_robin = list(range(len(ensemble.members))) * 3
            tau = analysis.observability_window(round_robin, ensemble)
            if tau is None:
                raise np.linalg.LinAlgError(
                    "round-robin over the ensemble never reaches joint full rank; pass --tau"
                )
    else:
        scenario = io.scenario_from_dict(payload)
        ensemble = simulation.build_ensemble(scenario)
        tau = args.tau if args.tau is not None else _probe_tau(scenario, ensemble)
        delta_x = scenario.delta_x if args.delta_x is None else args.delta_x
        delta_n = scenario.noise.delta_n if args.delta_n is None else args.delta_n

    if args.gamma is not None:
        gammas = [args.gamma]
    else:
        lo, hi, count = args.gamma_grid
        if not (0 < lo < hi) or int(count) != count or count < 1:
            raise ValueError("--gamma-grid needs 0 < LO < HI and an integer COUNT >= 1")
        gammas = list(np.geomspace(lo, hi, int(count)))

    consts = analysis.ensemble_constants(ensemble)
    h_b = [
        analysis.h_bounded(g, tau, delta_x, consts.c, delta_n, consts.lambda_bar) for g in gammas
    ]
    h_s = [
        analysis.h_stochastic(g, tau, consts.capital_c, consts.m, delta_x, consts.lambda_bar)
        for g in gammas
    ]
    with open(args.out, "w", encoding="utf-8") as fobj:
        io.write_bounds_csv(gammas, h_b, h_s, fobj)

    reports = {}
    for mode in ("bounded", "gaussian"):
        star_gamma = args.gamma
        if star_gamma is None:
            if mode == "bounded":
                star = analysis.gamma_star_bounded(consts.c, consts.lambda_bar, delta_n, delta_x)
            else:
                star = analysis.gamma_star_stochastic(
                    tau, consts.capital_c, consts.m, delta_x, consts.lambda_bar
                )
            star_gamma = star if star > 0 else gammas[0]
        reports[mode] = analysis.bound_report(
            ensemble, tau, star_gamma, delta_x, delta_n, noise_mode=mode
        )
    report_path = args.report if args.report else args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fobj:
        io.write_bound_reports_json(reports, fobj)
    print(f"# report written to {report_path}", file=sys.stderr)
    return EXIT_OK


def cmd_gamma_star(args) -> int:
    scenario = _load_scenario(args.config)
    ensemble = simulation.build_ensemble(scenario)
    consts = analysis.ensemble_constants(ensemble)
    mode = args.mode if args.mode else scenario.noise.kind
    if mode == "bounded":
        star = analysis.gamma_star_bounded(
            consts.c, consts.lambda_bar, scenario.noise.delta_n, scenario.delta_x
        )
    else:
        tau = _probe_tau(scenario, ensemble)
        star = analysis.gamma_star_stochastic(
            tau, consts.capital_c, consts.m, scenario.delta_x, consts.lambda_bar
        )
    print(io.format_float(star))
    return EXIT_OK


def cmd_replay(args) -> int:
    x0 = None
    if args.x0 is not None:
        try:
            x0 = [float(part) for part in args.x0.split(",") if part.strip()]
        except ValueError:
            raise ValueError(f"could not parse --x0 {args.x0!r}") from None
    state: EstimatorState | None = None
    config = None
    header_written = False
    with open(args.measurements, "r", encoding="utf-8") as src, open(
        args.out, "w", encoding="utf-8"
    ) as dst:
        for batch in io.iter_batches_jsonl(src):
            if state is None:
                n = batch.n_states
                if x0 is not None and len(x0) != n:
                    raise ValueError(f"--x0 has length {len(x0)}, measurements have {n} states")
                state = initial_state(n, x0)
                config = EstimatorConfig(args.gamma, n)
                io.write_estimates_header(dst, n)
                header_written = True
            if batch.t <= state.t:
                raise ValueError(
                    f"t regression: batch t={batch.t} after t={state.t} (input must be strictly increasing)"
                )
            if batch.t > state.t + 1:
                # Steps with no reported measurements leave the estimate unchanged.
                state = EstimatorState(state.x_hat, batch.t - 1)
            state = update(state, batch, config)
            io.write_estimates_row(dst, state.t, state.x_hat)
        if not header_written:
            if x0 is not None:
                io.write_estimates_header(dst, len(x0))
            else:
                dst.write("t\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = _load_scenario(args.config)
    checks = run_verification(seed=scenario.seed, gamma=scenario.gamma)
    all_ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name} ({detail})")
        all_ok = all_ok and passed
    return EXIT_OK if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wlstrack",
        description="Online regularized weighted-least-squares state tracking tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario, write per-step error CSV")
    p.add_argument("config", help="scenario JSON path")
    p.add_argument("out", help="output CSV path (t,mean_error,rms_error)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the Monte Carlo runs")
    p.add_argument("--dump-measurements", help="also dump run 0's measurement batches as JSON-lines")
    p.add_argument("--dump-estimates", help="also dump run 0's estimate trajectory as CSV")
    p.add_argument("--dump-runs", help="also dump every run's error trajectory as JSON-lines")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the scenario once per gamma, write a wide error CSV")
    p.add_argument("config", help="scenario JSON path")
    p.add_argument("gammas", help="comma-separated gamma values")
    p.add_argument("out", help="output CSV path (t,err_gamma_<g>,...)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate the error bounds over a gamma grid")
    p.add_argument("input", help="ensemble or scenario JSON path")
    p.add_argument("out", help="output CSV path (gamma,h_b,h_s)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gamma", type=float, help="single gamma value")
    group.add_argument(
        "--gamma-grid",
        nargs=3,
        type=float,
        metavar=("LO", "HI", "COUNT"),
        help="log-spaced gamma grid",
    )
    p.add_argument("--delta-x", type=float, help="state-variation scale (default: scenario's, or 1)")
    p.add_argument("--delta-n", type=float, help="noise scale (default: scenario's, or 1)")
    p.add_argument("--tau", type=int, help="observability window (default: computed)")
    p.add_argument("--report", help="bound report JSON path (default: OUT.report.json)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gamma-star", help="print the bound-optimal inertia weight")
    p.add_argument("config", help="scenario JSON path")
    p.add_argument("--mode", choices=["bounded", "gaussian"], help="noise mode (default: scenario's)")
    p.set_defaults(func=cmd_gamma_star)

    p = sub.add_parser("replay", help="stream recorded measurement batches through the estimator")
    p.add_argument("measurements", help="JSON-lines measurement file")
    p.add_argument("out", help="output CSV path (t,x_hat_1,...,x_hat_N)")
    p.add_argument("--gamma", type=float, required=True, help="inertia weight")
    p.add_argument("--x0", help="comma-separated initial estimate (default: zeros)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("verify", help="run the numerical invariant suite on a small instance")
    p.add_argument("config", help="scenario JSON path (provides seed and gamma)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
