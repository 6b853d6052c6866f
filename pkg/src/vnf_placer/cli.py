"""Command-line front end.

Subcommands: gen (instance files), solve (one algorithm on one instance,
CSV out), oracle (exhaustive offline optimum), experiment (the four
suites), summarize (aggregate CSVs). Exit codes: 0 success, 1 usage or
input error, 2 infeasibility, 3 oracle budget exceeded.
"""

from __future__ import annotations

import argparse
import sys

from . import dp, instance, randomized, reporting
from .experiments import ExperimentSpec, derive_seed, run_experiment
from .instance import InstanceFormatError
from .oracle import DEFAULT_MAX_STATES, BudgetExceededError, offline_optimal
from .randomized import InfeasibleFlowError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting itself."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="vnf-placer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("--kind", required=True, choices=["random", "adversarial", "pq"])
    p_gen.add_argument("--nodes", type=int, help="server count (random)")
    p_gen.add_argument("--flows", type=int, help="flow count (random/pq) or m (adversarial)")
    p_gen.add_argument("--max-demand", type=int, help="maximum flow demand (random)")
    p_gen.add_argument("--epsilon", type=float, help="hub per-unit cost (pq)")
    p_gen.add_argument("--path-min", type=int, help="minimum path size (random, default 1)")
    p_gen.add_argument("--path-max", type=int, help="maximum path size (random, default nodes)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_solve = sub.add_parser("solve", help="run one algorithm on an instance file")
    p_solve.add_argument("--algo", required=True, choices=["dp", "lv", "mc"])
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--r", type=int, default=10, help="rounds divisor (mc)")
    p_solve.add_argument("--row-update", action="store_true", help="row-only table refresh (lv)")
    p_solve.add_argument("--trials", type=int, default=1)
    p_solve.add_argument("--csv", required=True)
    p_solve.add_argument("--dump-allocations", help="also write per-flow allocations as JSON")

    p_oracle = sub.add_parser("oracle", help="exhaustive offline optimum (small instances)")
    p_oracle.add_argument("--instance", required=True)
    p_oracle.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    p_exp = sub.add_parser("experiment", help="run an experiment suite")
    p_exp.add_argument("--name", required=True, choices=["exp1", "exp2", "exp3", "exp4"])
    p_exp.add_argument("--seed", type=int, required=True, help="master seed")
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--scale", choices=["full", "desk"], default="desk")

    p_sum = sub.add_parser("summarize", help="aggregate CSVs written by this tool")
    p_sum.add_argument("paths", nargs="+")

    return parser


def _cmd_gen(args) -> int:
    if args.kind == "random":
        for flag in ("nodes", "flows", "max_demand"):
            if getattr(args, flag) is None:
                raise UsageError(f"--kind random requires --{flag.replace('_', '-')}")
        pmin = args.path_min if args.path_min is not None else 1
        pmax = args.path_max if args.path_max is not None else args.nodes
        inst = instance.gen_random(
            args.nodes, args.flows, args.max_demand,
            path_len_range=(pmin, pmax), seed=args.seed,
        )
    elif args.kind == "adversarial":
        if args.flows is None:
            raise UsageError("--kind adversarial requires --flows (an even m)")
        inst = instance.gen_adversarial(args.flows)
    else:  # pq
        if args.flows is None or args.epsilon is None:
            raise UsageError("--kind pq requires --flows and --epsilon")
        inst = instance.gen_pq(args.flows, args.epsilon)
    instance.save(inst, args.out)
    print(f"wrote {args.out} ({inst.n} servers, {inst.m} flows)")
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = instance.load(args.instance)
    from pathlib import Path

    instance_id = Path(args.instance).stem
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    results = []
    for t in range(args.trials):
        seed = args.seed if args.trials == 1 else derive_seed(args.seed, "trial", t)
        if args.algo == "dp":
            res = dp.run_online(inst, seed=seed, instance_id=instance_id)
        elif args.algo == "lv":
            res = randomized.run_lv(inst, seed=seed, row_update=args.row_update,
                                    instance_id=instance_id)
        else:
            res = randomized.run_mc(inst, seed=seed, r=args.r, instance_id=instance_id)
        res.trial = t
        results.append(res)
    reporting.write_results(args.csv, results)
    if args.dump_allocations:
        reporting.dump_allocations(args.dump_allocations, results)
    for res in results:
        print(f"{res.algo} trial {res.trial}: cost={reporting.format_cost(res.total_cost)} "
              f"fail_rate={res.fail_rate:.4f} time_ms={res.wall_time_ms:.3f}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = instance.load(args.instance)
    cost = offline_optimal(inst, max_states=args.max_states)
    print(reporting.format_cost(cost))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec(name=args.name, master_seed=args.seed, scale=args.scale)
    written = run_experiment(spec, args.out)
    for name, path in sorted(written.items()):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    entries = reporting.summarize(args.paths)
    print(reporting.format_summary(entries))
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "experiment": _cmd_experiment,
    "summarize": _cmd_summarize,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except (InstanceFormatError, reporting.SummaryError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleFlowError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceededError as e:
        print(f"oracle budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
