"""``meshfwd`` command line.

Exit codes: 0 success, 1 usage or scenario error, 2 engine error, 3 a
``reproduce --check`` value outside tolerance.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from meshfwd.markov import StateBudgetError
from meshfwd.report import reference
from meshfwd.report.scenario import ScenarioError, parse_scenario, scenario_from_dict
from meshfwd.report.tables import rank_table, run_scenario, sweep_csv
from meshfwd.simulator import SimulationTimeout

EXIT_OK, EXIT_USAGE, EXIT_ENGINE, EXIT_MISMATCH = 0, 1, 2, 3
REPRODUCIBLE = ("table1", "table2", "table3", "fig4")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def fixture_dir():
    return resources.files("meshfwd") / "scenarios"


def fixture_scenarios(prefix: str) -> list:
    paths = sorted(p for p in fixture_dir().iterdir() if p.name.startswith(prefix + "-") and p.name.endswith(".json"))
    return [parse_scenario(p) for p in paths]


def _override(s, args):
    d = s.to_dict()
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        d["reps"] = args.reps
    if getattr(args, "strict_paper", False):
        d["strict_paper"] = True
    return scenario_from_dict(d, s.name)


def _render(tables, fmt: str) -> str:
    if fmt == "csv":
        parts = [t.to_csv() for t in tables]
        return parts[0] + "".join(p.split("\n", 1)[1] for p in parts[1:])
    if fmt == "json":
        if len(tables) == 1:
            return tables[0].to_json()
        import json
        return json.dumps([t.to_dict() for t in tables], indent=2, sort_keys=True) + "\n"
    return "\n".join(t.to_text() for t in tables)


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args, engine_filter):
    if not args.scenario:
        raise _UsageError("--scenario is required")
    scenarios = [_override(parse_scenario(p), args) for p in args.scenario]
    for s in scenarios:
        if engine_filter == "analytic" and s.engine == "simulate":
            raise _UsageError(f"{s.name}: use 'simulate' for simulation scenarios")
        if engine_filter == "simulate" and s.engine != "simulate":
            raise _UsageError(f"{s.name}: engine {s.engine!r} is analytic; use 'analytic'")
    return scenarios


def cmd_run(args, engine_filter):
    tables = [run_scenario(s, jobs=args.jobs) for s in _load(args, engine_filter)]
    _emit(_render(tables, args.format), args.out)
    # the partial table is still written; failed rows make the run an engine error
    failed = [f"{t.name}/{r.scheme}" for t in tables for r in t.rows if r.error]
    if failed:
        print("scheme failures: " + ", ".join(failed), file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def cmd_compare(args):
    if not args.scenario or len(args.scenario) != 2:
        raise _UsageError("compare needs exactly two --scenario files (analytic first, simulated second)")
    a, b = [run_scenario(s, jobs=args.jobs) for s in _load(args, None)]
    cmp = rank_table(a, b)
    if args.format == "csv":
        text = cmp.to_csv()
    else:
        lines = [f"{'scheme':8} delay(a/s)  thr(a/s)  disp"]
        for s in cmp.schemes:
            lines.append(f"{s:8} {cmp.delay_ranks['analytic'][s]}/{cmp.delay_ranks['simulated'][s]:<9} "
                         f"{cmp.throughput_ranks['analytic'][s]}/{cmp.throughput_ranks['simulated'][s]:<7} "
                         f"{cmp.displacement[s]}")
        for src, ties in cmp.ties.items():
            for metric, group in ties:
                lines.append(f"tie ({src}, {metric}): {', '.join(group)}")
        lines.append(f"most divergent: {cmp.most_divergent or '-'}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        v = float(tok)
        out.append(int(v) if v.is_integer() and "." not in tok else v)
    return out


def cmd_sweep(args):
    if not args.scenario or len(args.scenario) != 1:
        raise _UsageError("sweep needs exactly one --scenario")
    (s,) = _load(args, None)
    try:
        values = _parse_values(args.values)
    except ValueError:
        raise _UsageError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    _emit(sweep_csv(s, args.axis, values, jobs=args.jobs), args.out)
    return EXIT_OK


def _check_table(tables, expected) -> list:
    problems = []
    for t in tables:
        for scheme, (d_ref, t_ref) in expected.get(t.name, {}).items():
            row = t.get(scheme)
            if row is None or row.error:
                problems.append(f"{t.name} {scheme}: missing")
                continue
            for what, got, ref in (("delay ratio", row.delay_ratio, d_ref), ("throughput ratio", row.throughput_ratio, t_ref)):
                if not abs(got - ref) <= reference.TOLERANCE:
                    problems.append(f"{t.name} {scheme} {what}: {got:.4f} vs {ref} (tolerance {reference.TOLERANCE})")
    return problems


def cmd_reproduce(args):
    if args.table == "fig4":
        (base,) = fixture_scenarios("fig4")
        base = _override(base, args)
        text = sweep_csv(base, "m", list(reference.FIG4_HOPS))
        problems = []
        if args.check:
            from meshfwd.report.tables import sweep
            for m, t in sweep(base, "m", list(reference.FIG4_HOPS)):
                ref = reference.FIG4_SP_DELAY[m]
                if abs(t["SP"].delay - ref) > 1e-9:
                    problems.append(f"fig4 m={m} SP delay {t['SP'].delay} vs {ref}")
    else:
        tables = [run_scenario(_override(s, args)) for s in fixture_scenarios(args.table)]
        text = _render(tables, args.format)
        problems = _check_table(tables, reference.TABLES[args.table]) if args.check else []
    _emit(text, args.out)
    if args.check:
        for p in problems:
            print("MISMATCH " + p, file=sys.stderr)
        print(f"check {args.table}: {'ok' if not problems else f'{len(problems)} mismatch(es)'}", file=sys.stderr)
        if problems:
            return EXIT_MISMATCH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshfwd", description="Delay/throughput of multipath forwarding schemes over lossy mesh paths.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", action="append", help="scenario JSON file (repeatable)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json", "table"), default="table")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--reps", type=int, help="override the number of simulation repetitions")
        sp.add_argument("--strict-paper", action="store_true", help="require n = 2^k - 1 for coded schemes")
        sp.add_argument("--jobs", type=int, default=1, help="parallel simulation workers")

    common(sub.add_parser("analytic", help="evaluate an analytic scenario"))
    common(sub.add_parser("simulate", help="run a simulation scenario"))
    common(sub.add_parser("compare", help="rank agreement between an analytic and a simulated scenario"))
    sw = sub.add_parser("sweep", help="vary one parameter and emit long-form CSV")
    common(sw)
    sw.add_argument("--axis", required=True, help="n, m, k, e, hops, seed, reps or sim.<field>")
    sw.add_argument("--values", required=True, help="comma-separated values")
    rp = sub.add_parser("reproduce", help="rerun a shipped fixture set")
    rp.add_argument("table", choices=REPRODUCIBLE)
    common(rp, scenario=False)
    rp.add_argument("--check", action="store_true", help="compare against the published values")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command in ("analytic", "simulate"):
            return cmd_run(args, args.command)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_reproduce(args)
    except (_UsageError, ScenarioError, FileNotFoundError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (StateBudgetError, SimulationTimeout, ValueError, KeyError, ArithmeticError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
