"""Command-line interface.

Exit codes: 0 success, 1 validation/config error, 2 IO error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .charts import CHART_KINDS, emit_charts, read_table
from .dynamics import sample_population, write_trajectory_csv
from .equilibrium import equilibrium_shift
from .errors import (
    ConfigError,
    ConsistencyError,
    ConvergenceError,
    ParseError,
    ValidityError,
)
from .graph import network_stats, parse_edge_list
from .harness import (
    amplification_table,
    build_network,
    load_sweep_spec,
    run_scenario,
    run_trajectories,
    write_amplification_csv,
    write_result_csv,
    write_trajectories_csv,
)
from .transform import (
    KernelTransform,
    default_bandwidth_grid,
    read_pairs_csv,
    select_bandwidth,
)
from .verify import run_checks


class _Parser(argparse.ArgumentParser):
    # Usage problems are validation errors (exit 1); argparse's default
    # exit code 2 is reserved for IO failures here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _floats_arg(raw: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ValidityError(f"{what} must be comma-separated numbers, got {raw!r}") from None


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_stats(args) -> int:
    with open(args.edgefile, "r", encoding="utf-8") as fh:
        edges = parse_edge_list(
            fh, comment_prefix=args.comment_prefix, undirected=args.undirected
        )
    stats = network_stats(edges)
    _write_or_print(json.dumps(stats.to_json(), indent=2), args.out)
    return 0


def cmd_fit(args) -> int:
    with open(args.pairs, "r", encoding="utf-8") as fh:
        pairs = read_pairs_csv(fh)
    grid = _floats_arg(args.grid, "--grid") if args.grid else default_bandwidth_grid()
    h, rmse = select_bandwidth(pairs.x, pairs.y, grid)
    fitted = KernelTransform(xs=pairs.x.copy(), ys=pairs.y.copy(), bandwidth=h)
    payload = fitted.to_dict()
    payload["loocv_rmse"] = rmse
    _write_or_print(json.dumps(payload, indent=2), args.out)
    if args.out:
        print(f"bandwidth {h:g} (loocv rmse {rmse:.6g}) -> {args.out}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    spec = load_sweep_spec(args.config)
    outdir = Path(args.out) if args.out else spec.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    items = run_trajectories(spec)

    combined = outdir / "trajectories.csv"
    with open(combined, "w", encoding="utf-8", newline="") as fh:
        write_trajectories_csv(items, fh)
    written = [combined]

    if args.per_seed:
        for phi, seed, traj in items:
            p = outdir / f"trajectory_phi{phi:g}_seed{seed}.csv"
            with open(p, "w", encoding="utf-8", newline="") as fh:
                write_trajectory_csv(traj, fh)
            written.append(p)
    if args.save_final:
        p = outdir / "final_opinions.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write("phi,seed,node,opinion\n")
            for phi, seed, traj in items:
                for node, v in enumerate(traj.final):
                    fh.write(f"{phi!r},{seed},{node},{float(v)!r}\n")
        written.append(p)
    if not args.no_charts:
        rows = [
            {"phi": phi, "seed": seed, "t": t, "avg_opinion": float(a)}
            for phi, seed, traj in items
            for t, a in enumerate(traj.avg_opinion)
        ]
        written.append(emit_charts(rows, "trajectory", outdir / "trajectory.svg"))

    for p in written:
        print(p)
    return 0


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.config)
    outdir = Path(args.out) if args.out else spec.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(spec, workers=args.workers)

    results_path = outdir / "results.csv"
    with open(results_path, "w", encoding="utf-8", newline="") as fh:
        write_result_csv(result, fh)
    written = [results_path]

    comparable = result.has_baseline and any(r.phi != 0.0 for r in result.rows)
    if comparable:
        table = amplification_table(result)
        p = outdir / "amplification.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            write_amplification_csv(table, fh)
        written.append(p)

    if not args.no_charts:
        rows = [
            {
                "phi": r.phi, "lambda_mean": r.lambda_mean, "kappa": r.kappa,
                "shift": r.shift, "one_off_bias": r.one_off_bias,
                "long_run_avg": r.long_run_avg,
            }
            for r in result.rows
        ]
        if comparable:
            written.append(emit_charts(rows, "heatmap", outdir / "heatmap.svg"))
        written.append(emit_charts(rows, "scatter", outdir / "scatter.svg"))

    for p in written:
        print(p)
    return 0


def cmd_equilibrium(args) -> int:
    spec = load_sweep_spec(args.config)
    params = _floats_arg(args.linear, "--linear")
    if len(params) != 2:
        raise ValidityError(f"--linear expects 'm,b', got {args.linear!r}")
    m, b = params
    W = build_network(spec.network)
    pop = sample_population(spec.base, W.n, spec.base.seeds[0])
    report = equilibrium_shift(W, pop.stubbornness, pop.innate, m, b)
    _write_or_print(
        json.dumps(report.to_json(include_shift_vector=args.shift_vector), indent=2),
        args.out,
    )
    return 0


def cmd_verify(args) -> int:
    props = None
    if args.props is not None:
        try:
            props = tuple(int(tok) for tok in args.props.split(",") if tok.strip())
        except ValueError:
            raise ValidityError(f"--props must be comma-separated integers, got {args.props!r}") from None
    identities = True if args.identities else None
    outcomes = run_checks(props=props, identities=identities)
    failed = False
    for o in outcomes:
        status = "PASS" if o.passed else "FAIL"
        failed = failed or not o.passed
        print(f"{status} {o.name}: {o.detail}")
    return 3 if failed else 0


def cmd_chart(args) -> int:
    with open(args.result, "r", encoding="utf-8") as fh:
        rows = read_table(fh)
    out = args.out or str(Path(args.result).with_suffix("")) + f"_{args.kind}.svg"
    print(emit_charts(rows, args.kind, out))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="opdyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("stats", help="summarize an edge-list file as JSON")
    p.add_argument("edgefile")
    p.add_argument("--undirected", action="store_true",
                   help="treat each line as an undirected link (stored as two arcs)")
    p.add_argument("--comment-prefix", default="#")
    p.add_argument("-o", "--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="fit a kernel transform to opinion pairs")
    p.add_argument("pairs", help="CSV with header x,y,stance")
    p.add_argument("--grid", help="comma-separated bandwidths (default: 20 log-spaced in [0.01, 0.5])")
    p.add_argument("-o", "--out", help="write transform JSON here instead of stdout")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run trajectories over the config's phi grid")
    p.add_argument("config", help="TOML scenario config")
    p.add_argument("-o", "--out", help="output directory (default from config)")
    p.add_argument("--per-seed", action="store_true", help="also write one CSV per run")
    p.add_argument("--save-final", action="store_true", help="also write final opinion vectors")
    p.add_argument("--no-charts", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the full parameter sweep")
    p.add_argument("config", help="TOML sweep config")
    p.add_argument("-o", "--out", help="output directory (default from config)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--no-charts", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("equilibrium", help="closed-form shift report for a linear transform")
    p.add_argument("config", help="TOML config providing network and scenario")
    p.add_argument("--linear", required=True, metavar="m,b",
                   help="slope and intercept of the transform")
    p.add_argument("--shift-vector", action="store_true",
                   help="include the per-node shift vector in the JSON")
    p.add_argument("-o", "--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("verify", help="run the theory checks; exit 3 on any violation")
    p.add_argument("--props", help="comma-separated subset of 1,2,3")
    p.add_argument("--identities", action="store_true",
                   help="run only the column-identity and mean-preservation checks "
                        "(combine with --props to add those)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("chart", help="render a chart from a result CSV")
    p.add_argument("result", help="results.csv or trajectories.csv")
    p.add_argument("--kind", required=True, choices=CHART_KINDS)
    p.add_argument("-o", "--out", help="output figure path (default: <input>_<kind>.svg)")
    p.set_defaults(func=cmd_chart)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (ParseError, ValidityError, ConfigError, ConvergenceError, ConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
