"""Command-line entry point: ``campaign-control <command> ...``.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 search budget
exhausted or MPC inner failure, 4 solution does not match the model.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import heuristics, instances
from .dynamics import Instance, InstanceError, PerturbationUndefined, Trajectory, convinced_count, \
    perturbed_objective, simulate
from .numeric import ParseError, format_rational, parse_rational, to_decimal

log = logging.getLogger("campaign_control")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_BUDGET, EXIT_MISMATCH = 0, 1, 2, 3, 4

BUILTINS = {
    "benchmark": instances.benchmark,
    "benchmark-dg": instances.benchmark_dg,
    "six-voter": instances.six_voter_example,
}


class InputError(Exception):
    pass


def load(spec: str) -> Instance:
    """An instance file, or ``builtin:NAME`` (benchmark, benchmark-dg, six-voter, sample-K)."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name in BUILTINS:
            return BUILTINS[name]()
        if name.startswith("sample-") and name[len("sample-"):].isdigit():
            return instances.reference_sample(int(name[len("sample-"):]))
        raise InputError(f"unknown builtin instance {name!r}; choose from "
                         f"{sorted(BUILTINS) + ['sample-1..5']}")
    path = Path(spec)
    if not path.is_file():
        raise InputError(f"instance file not found: {path}")
    return instances.load_instance(path)


def _rational(text: str) -> Fraction:
    """``p/q``, a decimal, or scientific notation such as ``1e-5`` (all exact)."""
    try:
        return parse_rational(text)
    except ParseError:
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a number: {text!r}") from None


def _rationals(text: str) -> list[Fraction]:
    return [_rational(tok) for tok in text.split(",") if tok.strip()]


def _ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"index sequence must be comma-separated integers, got {text!r}") from None


def _fmt(args, value: Fraction) -> str:
    return format_rational(value) if args.exact else to_decimal(value, args.digits)


def _report(args, instance: Instance, traj: Trajectory, extra: dict | None = None) -> None:
    from .plot import write_trajectory_csv

    count = convinced_count(traj.final, instance.left, instance.right)
    lines = [f"convinced: {count} of {instance.n}", f"stages: {traj.stages}"]
    if traj.stages and instance.left > 0 and instance.right < 1:
        lines.append(f"perturbed objective: {_fmt(args, perturbed_objective(traj, instance))}")
    if traj.controls:
        lines.append("controls: " + ", ".join(_fmt(args, u) for u in traj.controls))
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    print("\n".join(lines))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_trajectory_csv(fh, traj.states, traj.controls, instance.left, instance.right,
                                 args.digits, args.exact)
        log.info("trajectory written to %s", args.csv)


# ---------------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    instance = load(args.instance)
    if args.controls and args.sequence:
        raise InputError("give either --controls or --sequence, not both")
    if args.sequence is not None:
        if not instance.is_bc:
            raise InputError("index sequences need bounded-confidence dynamics")
        _, traj, _ = heuristics.apply_index_sequence(instance, _ints(args.sequence), _rational(args.delta))
    else:
        controls = _rationals(args.controls) if args.controls else []
        traj = simulate(instance, controls, stages=args.stages if not controls else None)
    _report(args, instance, traj)
    return EXIT_OK


def cmd_search(args) -> int:
    instance = load(args.instance)
    opts = heuristics.SearchOptions(mode=args.mode, width=args.width, samples=args.samples, seed=args.seed,
                                    delta=_rational(args.delta), budget=args.budget, workers=args.workers)
    res = heuristics.strongest_guy_search(instance, args.stages, opts)
    _report(args, instance, res.trajectory, {
        "sequence": ",".join(map(str, res.sequence)),
        "provenance": res.provenance,
        "bound": "optimal over index sequences" if res.optimal_in_space else "lower bound",
    })
    return EXIT_OK


def cmd_ga(args) -> int:
    from . import ga

    instance = load(args.instance)
    config = ga.GaConfig(population_size=args.population, generations=args.generations,
                         mutation_rate=_rational(args.mutation_rate), selector=args.selector,
                         survival_ratio=_rational(args.survival), fitness=args.fitness, seed=args.seed)
    res = ga.ga_run(instance, args.stages, config)
    if args.history:
        ga.write_history(res.history, args.history, args.digits)
    traj = simulate(instance, res.best.genes)
    _report(args, instance, traj, {"fitness": f"{args.fitness} = {_fmt(args, res.best_fitness)}",
                                   "generations run": len(res.history) - 1})
    return EXIT_OK


def cmd_mpc(args) -> int:
    instance = load(args.instance)
    if args.inner == "strongest-guy":
        inner = heuristics.strongest_guy_inner(heuristics.SearchOptions(workers=args.workers))
    else:
        from .milp.solution import highs_available, milp_inner
        if not highs_available():
            raise InputError("--inner milp needs the optional HiGHS solver (pip install highspy)")
        inner = milp_inner(args.inner, _rational(args.eps_hat), args.time_limit)
    controls, count, traj = heuristics.mpc(instance, args.stages, args.horizon, inner, mode=args.mode)
    _report(args, instance, traj, {"mpc horizon": args.horizon, "inner solver": args.inner})
    return EXIT_OK


def cmd_emit_milp(args) -> int:
    from .milp import MilpBuildOptions, build_model, check_big_m, emit_lp, emit_priorities, lint_lp
    from .milp.params import emit_parameters

    instance = load(args.instance)
    options = MilpBuildOptions(eps_hat=_rational(args.eps_hat), symmetry_break=args.symmetry_break)
    model = build_model(args.model, instance, args.stages, options)
    bad = check_big_m(model)
    if bad:
        log.error("Big-M check failed: %s", bad[0])
        return EXIT_INTERNAL
    text = emit_lp(model)
    problems = lint_lp(text)
    if problems:
        log.error("emitted LP does not lint: %s", problems[0])
        return EXIT_INTERNAL
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lp, ord_, prm = out.with_suffix(".lp"), out.with_suffix(".ord"), out.with_suffix(".prm")
    lp.write_text(text)
    ord_.write_text(emit_priorities(model))
    prm.write_text(emit_parameters(lp.name, ord_.name))
    counts = model.counts()
    print(f"model: {model.name}")
    print(f"variables: {counts['variables']} (binary {counts['binary']}, integer {counts['integer']})")
    print(f"constraints: {counts['constraints']}")
    print(f"written: {lp} {ord_} {prm}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .milp.solution import best_exact_control, extract_control, parse_solution, verify_control

    instance = load(args.instance)
    path = Path(args.solution)
    if not path.is_file():
        raise InputError(f"solution file not found: {path}")
    model = None
    if args.model:
        from .milp import MilpBuildOptions, build_model
        if args.stages is None:
            raise InputError("--model needs --stages")
        model = build_model(args.model, instance, args.stages, MilpBuildOptions(eps_hat=_rational(args.eps_hat)))
    sol = parse_solution(path.read_text(), model)
    N = args.stages
    if N is None:
        N = 0
        while f"x_{N}_0" in sol:
            N += 1
    controls = extract_control(sol, N, args.snap)
    report = verify_control(instance, controls, _rational(args.eps_hat))
    claimed = "n/a" if sol.objective is None else _fmt(args, sol.objective)
    extra = {"model objective": claimed, "exact convinced": report.count}
    if report.perturbed is not None:
        extra["exact perturbed objective"] = _fmt(args, report.perturbed)
    extra["safety-band hits"] = len(report.band_hits)
    for hit in report.band_hits[:10]:
        who = "control" if hit.a == 0 else f"voter {hit.a}"
        print(f"warning: stage {hit.stage}: {who} and voter {hit.b} at distance {_fmt(args, hit.distance)} "
              f"inside the safety band")
    if report.near_misses:
        extra["conviction near misses"] = ",".join(map(str, report.near_misses))
    if report.band_hits or report.near_misses:
        label, fixed, best = best_exact_control(instance, controls, _rational(args.eps_hat))
        extra["best exact variant"] = f"{label} ({best.count} convinced): " + ", ".join(_fmt(args, u) for u in fixed)
    _report(args, instance, report.trajectory, extra)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plot import CsvFormatError, read_trajectory_csv, render_svg

    path = Path(args.csv_in)
    if not path.is_file():
        raise InputError(f"trajectory file not found: {path}")
    try:
        with open(path, newline="") as fh:
            table = read_trajectory_csv(fh)
    except CsvFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    band, eps = None, None
    if args.instance:
        inst = load(args.instance)
        band = (inst.left, inst.right)
        eps = inst.epsilon if inst.is_bc else None
    elif args.interval:
        lo, hi = _rationals(args.interval)
        band = (lo, hi)
    else:
        inside = [x for x, ok in zip(table.states[-1], table.convinced) if ok]
        if inside:
            band = (min(inside), max(inside))
            log.warning("no interval given; shading the span of convinced final opinions")
    Path(args.out).write_text(render_svg(table, band, eps, args.title))
    print(f"written: {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="campaign-control", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", help="instance JSON file or builtin:NAME")
        sp.add_argument("--csv", help="write the trajectory as CSV (stage,agent,opinion,convinced)")
        sp.add_argument("--digits", type=int, default=12, help="decimal digits (truncated), default 12")
        sp.add_argument("--exact", action="store_true", help="print exact p/q values")

    sp = sub.add_parser("simulate", help="run the dynamics for given controls or an index sequence")
    common(sp)
    sp.add_argument("--controls", help="comma-separated controls, e.g. 9/20,0.5")
    sp.add_argument("--sequence", help="comma-separated strongest-guy indices (0 = centre)")
    sp.add_argument("--stages", type=int, help="stages for an uncontrolled run (default: instance horizon)")
    sp.add_argument("--delta", default="0", help="placement offset for --sequence")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("search", help="strongest-guy search")
    common(sp)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--mode", choices=("exhaustive", "beam", "random"), default="exhaustive")
    sp.add_argument("--width", type=int, default=16)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--delta", default="0")
    sp.add_argument("--budget", type=int, default=heuristics.DEFAULT_BUDGET)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("ga", help="genetic algorithm")
    common(sp)
    sp.add_argument("--stages", type=int, default=10)
    sp.add_argument("--population", type=int, default=500)
    sp.add_argument("--generations", type=int, default=250)
    sp.add_argument("--mutation-rate", default="1/15")
    sp.add_argument("--selector", choices=("WRS", "BCS"), default="BCS")
    sp.add_argument("--survival", default="0.95", help="BCS survival ratio")
    sp.add_argument("--fitness", default="MV", choices=("MV", "D2P2", "BD2A", "BD2M", "MDBFL", "MDBFLS", "MDBFL2CS"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--history", help="write per-generation history CSV")
    sp.set_defaults(func=cmd_ga)

    sp = sub.add_parser("mpc", help="receding-horizon control")
    common(sp)
    sp.add_argument("--stages", type=int, default=10)
    sp.add_argument("--horizon", type=int, required=True)
    sp.add_argument("--inner", choices=("strongest-guy", "bc-advanced", "bc-basic"), default="strongest-guy")
    sp.add_argument("--mode", choices=("sliding", "growing"), default="sliding")
    sp.add_argument("--eps-hat", default="1/100000")
    sp.add_argument("--time-limit", type=float, default=600.0)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_mpc)

    sp = sub.add_parser("emit-milp", help="write LP, priority and solver-parameter files")
    sp.add_argument("instance")
    sp.add_argument("--model", choices=("dg", "bc-basic", "bc-advanced"), required=True)
    sp.add_argument("--stages", type=int, required=True)
    sp.add_argument("--eps-hat", default="1/100000")
    sp.add_argument("--symmetry-break", action="store_true")
    sp.add_argument("--out", required=True, help="output path prefix; .lp/.ord/.prm are appended")
    sp.set_defaults(func=cmd_emit_milp)

    sp = sub.add_parser("verify", help="re-check a solver solution exactly")
    common(sp)
    sp.add_argument("solution")
    sp.add_argument("--stages", type=int, help="number of controls (default: as many x_t_0 as present)")
    sp.add_argument("--model", choices=("dg", "bc-basic", "bc-advanced"),
                    help="check variable names against this model")
    sp.add_argument("--eps-hat", default="1/100000")
    sp.add_argument("--snap", type=int, metavar="DEN", help="round controls to the nearest fraction with denominator <= DEN")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("plot", help="render a trajectory CSV as SVG")
    sp.add_argument("csv_in")
    sp.add_argument("--out", required=True)
    sp.add_argument("--instance", help="instance for the conviction band and confidence reach")
    sp.add_argument("--interval", help="conviction interval l,r when no instance is given")
    sp.add_argument("--title", default="")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s: %(message)s")
    from .milp.solution import SolutionError, SolutionMismatch

    try:
        return args.func(args)
    except SolutionMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except heuristics.BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except heuristics.InnerSolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, InstanceError, ParseError, SolutionError, PerturbationUndefined, ValueError,
            IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # pragma: no cover
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
