"""Command-line interface.

Exit codes: 0 success, 1 infeasible (or a failed verification), 2 time
limit, 64 usage error.
"""

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

from . import experiments
from .errors import DomainError, GuardError, InstanceParseError
from .model import PROFILES, SideConstraints, generate_sparse, read_instance, read_solution, verify, write_instance
from .methods import METHODS, SolveOptions, solve
from .presolve import presolve
from .reformulate import DEFAULT_SUBSET_BUDGET, build_full
from .solver import export_lp

EXIT_OK, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_USAGE = 0, 1, 2, 64
THREADS_ENV = "CCSMCP_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _threads() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {value!r}")


def _emit(args, doc: dict, text: str) -> None:
    out = json.dumps(doc, indent=1, sort_keys=True) + "\n" if args.json else text
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _load(args):
    inst = read_instance(args.instance)
    if getattr(args, "epsilon_override", None) is not None:
        inst = inst.with_risks(args.epsilon_override)
    return inst


def cmd_generate(args) -> int:
    side = SideConstraints("budget", args.budget) if args.budget is not None else None
    inst = generate_sparse(args.n, args.m, args.eps, seed=args.seed, profile=args.profile, side=side)
    if args.out:
        write_instance(inst, args.out)
    else:
        sys.stdout.write(json.dumps(inst.to_json(), indent=1) + "\n")
    return EXIT_OK


def cmd_presolve(args) -> int:
    inst = _load(args)
    res = presolve(inst, reduce=not args.no_reduce)
    table = res.table()
    lines = [f"{'row':>4}  {'status':<8} {'kind':<14} detail"]
    lines += [f"{i:>4}  {st:<8} {kind:<14} {detail}" for i, st, kind, detail in table]
    lines.append(f"kept {len(res.kept)} of {inst.m} rows")
    doc = {"kept": list(res.kept), "dropped": {str(k): v for k, v in res.dropped.items()},
           "rows": [{"row": i, "status": st, "kind": kind, "detail": d} for i, st, kind, d in table]}
    _emit(args, doc, "\n".join(lines) + "\n")
    return EXIT_INFEASIBLE if res.infeasible_rows else EXIT_OK


def _report_text(rep) -> str:
    lines = [f"method            {rep.method}", f"status            {rep.status}"]
    if rep.solution is not None:
        sol = rep.solution
        lines.append(f"objective         {sol.objective:.10g}")
        if not math.isnan(rep.model_objective):
            lines.append(f"model objective   {rep.model_objective:.10g}")
        lines.append(f"verified feasible {sol.feasible}")
        if sol.violated:
            lines.append(f"violated rows     {' '.join(map(str, sol.violated))}")
        lines.append(f"selected columns  {' '.join(str(j) for j, v in enumerate(sol.x) if v)}")
    if rep.certificate:
        lines.append(f"certificate       {json.dumps(rep.certificate, sort_keys=True)}")
    lines.append(f"iterations        {rep.iterations}")
    for note in rep.notes:
        lines.append(f"note              {note}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    inst = _load(args)
    _threads()
    u = None
    if args.u_estimate is not None:
        vals = [int(v) for v in args.u_estimate.split(",")]
        u = vals * inst.m if len(vals) == 1 else vals
        if len(u) != inst.m:
            raise DomainError("--u-estimate needs one value or one per row")
    if args.method in ("saa", "is") and not args.n_scenarios:
        raise DomainError(f"--method {args.method} needs --n-scenarios")
    opts = SolveOptions(n_scenarios=args.n_scenarios, alpha=args.alpha, seed=args.seed,
                        time_limit=args.time_limit, subset_budget=args.subset_budget, u_estimate=u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = solve(inst, args.method, opts)
    doc = rep.to_json()
    doc["time"] = None  # keep the primary output reproducible byte for byte
    _emit(args, doc, _report_text(rep))
    for note in rep.notes:
        print(f"warning: {note}", file=sys.stderr)
    if rep.status == "time_limit":
        return EXIT_TIMEOUT
    if rep.status == "infeasible" or (rep.solution is not None and not rep.solution.feasible):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load(args)
    doc = read_solution(args.solution)
    sol = verify(inst, doc["x"])
    text = [f"feasible   {sol.feasible}", f"objective  {sol.objective:.10g}"]
    for i, (q, e) in enumerate(zip(sol.per_item_prob, inst.risks)):
        mark = "VIOLATED" if i in sol.violated else "ok"
        text.append(f"row {i:>4}  prob {q:.12f}  target {1 - e:.12f}  {mark}")
    out = sol.to_json()
    out["violated"] = list(sol.violated)
    _emit(args, out, "\n".join(text) + "\n")
    if not sol.feasible:
        print(f"violated rows: {' '.join(map(str, sol.violated)) or 'side constraint'}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_export_lp(args) -> int:
    inst = _load(args)
    variant = "I" if args.variant == "1" else "II"
    model = build_full(inst, variant, presolve(inst), args.subset_budget)
    if not args.out:
        raise DomainError("export-lp needs --out")
    export_lp(model, args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = experiments.default_spec(args.study)
    if args.seed is not None:
        spec.seed = args.seed
    if args.time_limit is not None:
        spec.time_limit = args.time_limit
    if args.n_scenarios:
        spec.n_scenarios = [args.n_scenarios]
    if args.replications:
        spec.replications = args.replications
    if args.epsilon_override is not None:
        spec.eps = [args.epsilon_override]
    if args.alpha is not None:
        spec.alpha = args.alpha
    rows = experiments.run(spec)
    if args.out:
        experiments.write_csv(rows, args.out)
    if args.json:
        import dataclasses

        sys.stdout.write(json.dumps([dataclasses.asdict(r) for r in rows], indent=1, default=str) + "\n")
    else:
        sys.stdout.write(experiments.format_table(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccsmcp", description="Chance-constrained set multicover: models, solvers, studies.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", help="instance JSON file")
            sp.add_argument("--epsilon-override", type=float, help="use this risk level for every row")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--out", help="write the primary output to this file")

    g = sub.add_parser("generate", help="random sparse instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--eps", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--profile", default="feasible", choices=sorted(PROFILES))
    g.add_argument("--budget", type=int, help="add the side constraint sum(x) <= BUDGET")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    pr = sub.add_parser("presolve", help="dominance reduction and row classification")
    common(pr)
    pr.add_argument("--no-reduce", action="store_true")
    pr.set_defaults(func=cmd_presolve)

    s = sub.add_parser("solve", help="solve an instance")
    common(s)
    s.add_argument("--method", choices=METHODS, default="oa2")
    s.add_argument("--n-scenarios", type=int)
    s.add_argument("--alpha", type=float, help="SAA risk level (defaults to each row's eps)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--subset-budget", type=int, default=DEFAULT_SUBSET_BUDGET)
    s.add_argument("--u-estimate", help="IS selection-count guess: one integer or one per row, comma separated")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution file against an instance")
    common(v)
    v.add_argument("solution", help="solution JSON file")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export-lp", help="write the full linearized model in LP format")
    common(e)
    e.add_argument("--variant", choices=("1", "2"), default="2")
    e.add_argument("--subset-budget", type=int, default=DEFAULT_SUBSET_BUDGET)
    e.set_defaults(func=cmd_export_lp)

    x = sub.add_parser("experiment", help="run a study on its desk-scale default grid")
    x.add_argument("study", choices=experiments.STUDIES)
    x.add_argument("--seed", type=int)
    x.add_argument("--time-limit", type=float)
    x.add_argument("--n-scenarios", type=int)
    x.add_argument("--replications", type=int)
    x.add_argument("--epsilon-override", type=float)
    x.add_argument("--alpha", type=float)
    x.add_argument("--json", action="store_true")
    x.add_argument("--out", help="CSV output path")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (InstanceParseError, GuardError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
