"""Command-line interface.

Subcommands map one-to-one onto the library surface: projections and
required rates, the published contribution table, what-if comparisons,
roster randomization and simulation, the treatment-effect estimators, the
causal forest, the default-setting game, and the HTTP service.

Exit codes: 0 on success, 2 for anything wrong with inputs (bad flags, bad
files, infeasible requests), 1 for unexpected internal failures. Machine
output goes to stdout (use --json for stable structured form); warnings and
errors go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .dataio import (
    ScenarioStore,
    display_block,
    load_roster,
    projection_to_json,
    save_roster,
)
from .errors import RetirelabError, ValidationError
from .estimators import arm_outcomes, bootstrap_mean_diff, het_effects, itt, late
from .experiment import ARMS, PopulationSpec, assign, simulate_covariates, simulate_population
from .forest import (
    ForestParams,
    cate_summary,
    feature_matrix,
    forest_from_json,
    forest_to_json,
    predict_cate,
    train_forest,
    training_arrays,
)
from .game import EmployeePayoffs, GameParams, spe, sweep
from .projection import (
    Assumptions,
    EmployeeProfile,
    generate_rate_table,
    project_retirement_income,
    whatif,
)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _fmt_rand(v: float) -> str:
    return "R " + f"{v:,.0f}".replace(",", " ")


def _profile_from_args(args) -> EmployeeProfile:
    return EmployeeProfile(
        age=args.age,
        retirement_age=args.retirement_age,
        salary=args.salary,
        balance=args.balance,
        rate=args.rate,
        gender=args.gender,
    )


def _assumptions_from_args(args) -> Assumptions:
    return Assumptions(
        inflation=args.inflation,
        nominal_low=args.nominal_low,
        nominal_high=args.nominal_high,
        salary_growth=args.salary_growth,
    )


def _print_projection(proj) -> None:
    disp = display_block(proj)
    print(f"fund at retirement   {_fmt_rand(proj.fund_low)} - {_fmt_rand(proj.fund_high)}")
    print(
        "income per year      "
        f"{_fmt_rand(disp['income_low'])} - {_fmt_rand(disp['income_high'])}"
    )
    print(
        "income per month     "
        f"{_fmt_rand(disp['monthly_low'])} - {_fmt_rand(disp['monthly_high'])}"
    )
    print(
        "replacement rate     "
        f"{disp['replacement_low_pct']}% - {disp['replacement_high_pct']}%"
    )
    print(f"drawdown rate        {proj.drawdown * 100:.2f}%")


def cmd_project(args) -> int:
    proj = project_retirement_income(
        _profile_from_args(args), _assumptions_from_args(args), monthly=args.monthly
    )
    if args.json:
        _print_json({"results": projection_to_json(proj), "display": display_block(proj)})
    else:
        _print_projection(proj)
    return 0


def cmd_required_rate(args) -> int:
    from .projection import required_contribution_rate, required_rate_with_balance

    if args.salary is not None:
        rate = required_rate_with_balance(
            replacement=args.p,
            drawdown=args.d,
            annual_return=args.r,
            years=args.n,
            salary=args.salary,
            balance=args.balance,
        )
    else:
        rate = required_contribution_rate(
            replacement=args.p, drawdown=args.d, annual_return=args.r, years=args.n
        )
    if args.json:
        _print_json({"rate": rate, "rate_pct": rate * 100.0})
    else:
        print(f"required contribution rate: {rate * 100:.2f}% of salary")
    return 0


def cmd_table(args) -> int:
    start_ages = [int(s) for s in args.start_ages.split(",")]
    retirement_ages = [int(s) for s in args.retirement_ages.split(",")]
    rows, cols, grid = generate_rate_table(
        args.p, args.d, args.r, start_ages, retirement_ages
    )
    if args.json:
        _print_json(
            {
                "replacement": args.p,
                "drawdown": args.d,
                "annual_return": args.r,
                "start_ages": rows,
                "retirement_ages": cols,
                "rates": [[None if np.isnan(v) else v for v in row] for row in grid],
            }
        )
        return 0
    writer = csv.writer(sys.stdout) if args.csv else None
    header = ["start_age"] + [str(c) for c in cols]
    if writer:
        writer.writerow(header)
    else:
        print("  ".join(f"{h:>9}" for h in header))
    for age, row in zip(rows, grid):
        cells = ["" if np.isnan(v) else f"{v * 100:.1f}" for v in row]
        if writer:
            writer.writerow([age] + cells)
        else:
            print("  ".join(f"{c:>9}" for c in [str(age)] + cells))
    return 0


def cmd_whatif(args) -> int:
    if args.new_rate is None and args.new_retirement_age is None:
        raise ValidationError(
            [("--new-rate/--new-retirement-age", "set at least one change")]
        )
    base, alt = whatif(
        _profile_from_args(args),
        _assumptions_from_args(args),
        rate=args.new_rate,
        retirement_age=args.new_retirement_age,
        monthly=args.monthly,
    )
    if args.json:
        _print_json(
            {
                "base": {"results": projection_to_json(base), "display": display_block(base)},
                "alt": {"results": projection_to_json(alt), "display": display_block(alt)},
            }
        )
    else:
        print("== baseline ==")
        _print_projection(base)
        print("== adjusted ==")
        _print_projection(alt)
    return 0


def cmd_randomize(args) -> int:
    records, report = load_roster(args.input)
    already = [r.id for r in records if r.treatment]
    if already:
        raise ValidationError(
            [("input", f"{len(already)} records already assigned (first: {already[0]})")]
        )
    assigned = assign(records, seed=args.seed)
    save_roster(assigned, args.output)
    counts = {arm: 0 for arm in ARMS}
    for r in assigned:
        counts[r.treatment] += 1
    print(
        f"assigned {len(assigned)} records: "
        + ", ".join(f"{arm}={counts[arm]}" for arm in ARMS),
        file=sys.stderr,
    )
    return 0


def _spec_from_args(args) -> PopulationSpec:
    return PopulationSpec(
        n=args.n,
        effect_email=args.effect_email,
        effect_email_phone=args.effect_email_phone,
        uptake_email=args.uptake_email,
        uptake_email_phone=args.uptake_email_phone,
        noise_sd=args.noise_sd,
        share_min=args.share_min,
        share_male=args.share_male,
        share_disadvantaged=args.share_disadvantaged,
        attrition_n=args.attrition_n,
    )


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    if args.covariates_only:
        records = simulate_covariates(spec, seed=args.seed)
    elif args.roster:
        roster, _ = load_roster(args.roster)
        records = simulate_population(spec, seed=args.seed, roster=roster)
    else:
        records = simulate_population(spec, seed=args.seed)
    save_roster(records, args.output)
    print(f"wrote {len(records)} records to {args.output}", file=sys.stderr)
    return 0


def _print_fit(fit) -> None:
    print(f"n = {fit.nobs}   rmse = {fit.rmse:.4f}", end="")
    if fit.first_stage_f is not None:
        print(f"   first-stage F = {fit.first_stage_f:.1f}", end="")
    print()
    ci = fit.ci95()
    width = max(len(n) for n in fit.names)
    for i, name in enumerate(fit.names):
        print(
            f"{name:<{width}}  {fit.coef[i]:>9.4f}  (se {fit.se[i]:.4f})"
            f"  [{ci[i, 0]:.4f}, {ci[i, 1]:.4f}]"
        )


def cmd_analyze(args) -> int:
    records, report = load_roster(args.input)
    if args.estimator == "itt":
        result = itt(records, outcome=args.outcome)
        payload = result.to_json()
    elif args.estimator == "late":
        result = late(records, outcome=args.outcome)
        payload = result.to_json()
    elif args.estimator == "het":
        result = het_effects(records, group=args.group, outcome=args.outcome)
        payload = result.to_json()
    else:
        if args.seed is None:
            raise ValidationError([("--seed", "required for bootstrap")])
        ctrl = arm_outcomes(records, "control", outcome=args.outcome)
        present = {r.treatment for r in records}
        payload = {}
        result = None
        for arm in ARMS[1:]:
            if arm in present:
                payload[arm] = bootstrap_mean_diff(
                    arm_outcomes(records, arm, outcome=args.outcome),
                    ctrl,
                    seed=args.seed,
                    draws=args.draws,
                ).to_json()
    if args.json:
        _print_json({"estimator": args.estimator, "cleaning": report.to_json(), "result": payload})
    elif args.estimator == "bootstrap":
        for arm, res in payload.items():
            lo, hi = res["ci95"]
            print(f"{arm}: {res['estimate']:.4f}  [{lo:.4f}, {hi:.4f}]  ({res['draws']} draws)")
    else:
        _print_fit(result)
    return 0


def cmd_forest_train(args) -> int:
    records, _ = load_roster(args.input)
    X, y, w = training_arrays(records, outcome=args.outcome)
    params = ForestParams(
        n_trees=args.trees,
        split_frac=args.split_frac,
        est_frac=args.est_frac,
        min_treated=args.min_treated,
        min_control=args.min_control,
        feature_subsample=args.feature_subsample,
        penalty=args.penalty,
        max_depth=args.max_depth,
    )
    forest = train_forest(X, y, w, params, seed=args.seed)
    with open(args.output, "w") as fh:
        json.dump(forest_to_json(forest), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    print(f"trained {params.n_trees} trees on {len(y)} records", file=sys.stderr)
    return 0


def _load_forest(path: str):
    with open(path) as fh:
        return forest_from_json(json.load(fh))


def cmd_forest_predict(args) -> int:
    forest = _load_forest(args.model)
    records, _ = load_roster(args.input)
    cates = predict_cate(forest, feature_matrix(records))
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["id", "cate"])
        for rec, c in zip(records, cates):
            writer.writerow([rec.id, repr(float(c))])
    finally:
        if args.output:
            out.close()
    return 0


def cmd_forest_summary(args) -> int:
    forest = _load_forest(args.model)
    records, _ = load_roster(args.input)
    summary = cate_summary(forest, feature_matrix(records))
    if args.json:
        _print_json(summary)
    else:
        print(f"n = {summary['n']}   mean = {summary['mean']:.4f}   sd = {summary['sd']:.4f}")
        pct = summary["percentiles"]
        print("  ".join(f"{k}={v:.4f}" for k, v in sorted(pct.items())))
        print(f"share positive = {summary['share_positive']:.3f}")
    return 0


def cmd_game_spe(args) -> int:
    eq = spe(GameParams(delta=args.delta, y=args.y, payoffs=EmployeePayoffs()))
    if args.json:
        _print_json(eq.to_json())
    else:
        print(f"employer plays: {eq.employer}")
        print(f"employee types play: {eq.employee[0]}, {eq.employee[1]}")
        print(f"high payoff {eq.high_payoff:.4f} vs pass payoff {eq.pass_payoff:.4f}")
        if eq.q_range is not None:
            print(f"any mixing probability in [{eq.q_range[0]}, {eq.q_range[1]}] works")
    return 0


def cmd_game_sweep(args) -> int:
    deltas = [float(s) for s in args.deltas.split(",")]
    ys = [float(s) for s in args.ys.split(",")]
    rows = sweep(deltas, ys)
    writer = csv.writer(sys.stdout)
    writer.writerow(["delta", "y", "employer", "employer_value"])
    for row in rows:
        writer.writerow(
            [row["delta"], row["y"], row["employer"], repr(row["employer_value"])]
        )
    return 0


def cmd_scenarios(args) -> int:
    store = ScenarioStore(args.store)
    if args.action == "list":
        _print_json({"scenarios": store.list()})
    else:
        _print_json(store.get(args.id))
    return 0


def cmd_serve(args) -> int:
    from .service import load_config, serve

    config = load_config(args.config)
    if args.host:
        from dataclasses import replace

        config = replace(config, host=args.host)
    if args.port:
        from dataclasses import replace

        config = replace(config, port=args.port)
    serve(config)
    return 0


def _add_projection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--age", type=int, required=True)
    p.add_argument("--retirement-age", type=int, required=True)
    p.add_argument("--salary", type=float, required=True, help="annual salary, rand")
    p.add_argument("--balance", type=float, default=0.0, help="current fund balance, rand")
    p.add_argument("--rate", type=float, default=0.075, help="contribution fraction of salary")
    p.add_argument("--gender", choices=("M", "F"), default="M")
    p.add_argument("--inflation", type=float, default=0.05)
    p.add_argument("--nominal-low", type=float, default=0.08)
    p.add_argument("--nominal-high", type=float, default=0.10)
    p.add_argument("--salary-growth", type=float, default=None)
    p.add_argument("--monthly", action="store_true", help="compound monthly")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retirelab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="project retirement income for one profile")
    _add_projection_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("required-rate", help="contribution rate needed for a target")
    p.add_argument("--p", type=float, required=True, help="replacement rate target")
    p.add_argument("--d", type=float, required=True, help="drawdown rate")
    p.add_argument("--r", type=float, required=True, help="real annual return")
    p.add_argument("--n", type=float, required=True, help="years of saving")
    p.add_argument("--salary", type=float, default=None)
    p.add_argument("--balance", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_required_rate)

    p = sub.add_parser("table", help="required-rate grid by start and retirement age")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--start-ages", default="25,30,35,40")
    p.add_argument("--retirement-ages", default="55,60,65,70,75")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("whatif", help="compare a projection against an adjusted one")
    _add_projection_args(p)
    p.add_argument("--new-rate", type=float, default=None)
    p.add_argument("--new-retirement-age", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("randomize", help="assign treatment arms to an unassigned roster")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_randomize)

    p = sub.add_parser("simulate", help="draw a synthetic experimental roster")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--roster", default=None, help="fill outcomes on an assigned roster")
    p.add_argument("--covariates-only", action="store_true")
    p.add_argument("--n", type=int, default=775)
    p.add_argument("--effect-email", type=float, default=1.0)
    p.add_argument("--effect-email-phone", type=float, default=1.0)
    p.add_argument("--uptake-email", type=float, default=0.27)
    p.add_argument("--uptake-email-phone", type=float, default=0.65)
    p.add_argument("--noise-sd", type=float, default=0.9)
    p.add_argument("--share-min", type=float, default=0.62)
    p.add_argument("--share-male", type=float, default=0.47)
    p.add_argument("--share-disadvantaged", type=float, default=0.71)
    p.add_argument("--attrition-n", type=int, default=10)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="treatment-effect estimates from a roster")
    p.add_argument("estimator", choices=("itt", "late", "het", "bootstrap"))
    p.add_argument("--input", required=True)
    p.add_argument("--outcome", choices=("change", "post"), default="change")
    p.add_argument("--group", choices=("male", "disadvantaged", "min_saver"), default="male")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--draws", type=int, default=5000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("forest", help="honest causal forest")
    fsub = p.add_subparsers(dest="forest_command", required=True)

    ft = fsub.add_parser("train", help="train and save a forest")
    ft.add_argument("--input", required=True)
    ft.add_argument("--output", required=True)
    ft.add_argument("--seed", type=int, required=True)
    ft.add_argument("--outcome", choices=("change", "post"), default="change")
    ft.add_argument("--trees", type=int, default=2000)
    ft.add_argument("--split-frac", type=float, default=0.25)
    ft.add_argument("--est-frac", type=float, default=0.25)
    ft.add_argument("--min-treated", type=int, default=5)
    ft.add_argument("--min-control", type=int, default=5)
    ft.add_argument("--feature-subsample", type=float, default=0.5)
    ft.add_argument("--penalty", type=float, default=1.0)
    ft.add_argument("--max-depth", type=int, default=None)
    ft.set_defaults(func=cmd_forest_train)

    fp = fsub.add_parser("predict", help="per-record effect estimates")
    fp.add_argument("--model", required=True)
    fp.add_argument("--input", required=True)
    fp.add_argument("--output", default=None)
    fp.set_defaults(func=cmd_forest_predict)

    fs = fsub.add_parser("summary", help="distribution of predicted effects")
    fs.add_argument("--model", required=True)
    fs.add_argument("--input", required=True)
    fs.add_argument("--json", action="store_true")
    fs.set_defaults(func=cmd_forest_summary)

    p = sub.add_parser("game", help="employer default-setting game")
    gsub = p.add_subparsers(dest="game_command", required=True)

    gs = gsub.add_parser("spe", help="equilibrium for one parameter point")
    gs.add_argument("--delta", type=float, required=True)
    gs.add_argument("--y", type=float, required=True)
    gs.add_argument("--json", action="store_true")
    gs.set_defaults(func=cmd_game_spe)

    gw = gsub.add_parser("sweep", help="equilibrium region over a parameter grid")
    gw.add_argument("--deltas", required=True, help="comma-separated delta values")
    gw.add_argument("--ys", required=True, help="comma-separated y values")
    gw.set_defaults(func=cmd_game_sweep)

    p = sub.add_parser("scenarios", help="inspect a scenario store")
    p.add_argument("action", choices=("list", "get"))
    p.add_argument("--store", required=True)
    p.add_argument("--id", default=None)
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "scenarios" and args.action == "get" and not args.id:
        parser.error("scenarios get requires --id")
    try:
        return args.func(args)
    except ValidationError as exc:
        for path, msg in exc.field_errors:
            print(f"error: {path}: {msg}" if path else f"error: {msg}", file=sys.stderr)
        return 2
    except (RetirelabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
