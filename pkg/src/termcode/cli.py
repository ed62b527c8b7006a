"""The termcode command line: parse, transform, analyse, search, bound,
reproduce.  All output is machine-parseable (TSV, exact fractions) and
byte-deterministic for a fixed argv."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cases, depgraph, entropy, guessing, normalize, search, terms

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_output(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_common(p: argparse.ArgumentParser, with_n: bool = False) -> None:
    p.add_argument("input", help="input file, or - for stdin")
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    if with_n:
        p.add_argument("--n", type=int, required=True, help="alphabet size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="termcode",
        description="Bounds for maximum code sizes of term-equation systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse and pretty-print an instance")
    _add_common(p)

    p = sub.add_parser("normalise", help="flatten, quotient, and close collisions")
    _add_common(p)
    p.add_argument("--provenance", default=None, help="write a variable/origin TSV here")

    p = sub.add_parser("diversify", help="normalise, then give each equation a fresh symbol")
    _add_common(p)
    p.add_argument("--provenance", default=None, help="write a variable/origin TSV here")

    p = sub.add_parser("graph", help="emit the dependency graph")
    _add_common(p)
    p.add_argument("--labelled", action="store_true", help="labelled graph (equation vertices)")
    p.add_argument("--format", choices=("dot", "tsv"), default="dot")

    p = sub.add_parser("guess", help="exhaustive guessing-game maximum, or score a strategy")
    _add_common(p, with_n=True)
    p.add_argument("--labelled", action="store_true")
    p.add_argument("--budget", type=int, default=guessing.DEFAULT_STRATEGY_BUDGET)
    p.add_argument("--strategy", default=None, help="score this strategy file instead of maximising")

    p = sub.add_parser("bound", help="entropy LP upper bound for the growth exponent")
    _add_common(p)
    p.add_argument("--unlabelled", action="store_true", help="use the unlabelled dependency digraph")
    p.add_argument("--emit-lp", default=None, help="also write the LP in CPLEX-LP format here")
    p.add_argument("--certificate", action="store_true", help="print the full primal certificate")

    p = sub.add_parser("search", help="maximise the solution count over interpretations")
    _add_common(p, with_n=True)
    _add_search_flags(p)

    p = sub.add_parser("dispersion", help="maximise distinct output tuples of a term map")
    _add_common(p, with_n=True)
    _add_search_flags(p)

    p = sub.add_parser("ilp", help="export the 0-1 programme for the maximum code size")
    _add_common(p, with_n=True)
    p.add_argument("--target", type=int, default=None, help="add the row: count >= target+1")

    p = sub.add_parser("case", help="reproduce published values for a bundled case study")
    p.add_argument("name", help=f"one of: {', '.join(cases.case_names())}")
    p.add_argument("--row", type=int, default=None, help="restrict to one alphabet size")
    p.add_argument("--all", action="store_true", help="include rows beyond desk scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)

    return parser


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("exhaustive", "branch-bound", "local"), default="exhaustive")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=search.DEFAULT_RESTARTS)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)


def _cfg(args) -> search.SearchConfig:
    return search.SearchConfig(
        mode=args.mode,
        budget=args.budget,
        seed=args.seed,
        restarts=args.restarts,
        target=args.target,
        threads=args.threads,
    )


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except terms.TermcodeError as exc:
        print(f"termcode: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "parse":
        inst = terms.parse_instance(_read_input(args.input))
        _write_output(terms.format_instance(inst), args.output)
        return EXIT_OK

    if cmd in ("normalise", "diversify"):
        inst = terms.parse_instance(_read_input(args.input))
        nf, _ = normalize.normalise(inst)
        out = normalize.diversify(nf) if cmd == "diversify" else nf
        _write_output(terms.format_instance(out.to_term_instance()), args.output)
        if args.provenance:
            rows = [f"{v}\t{p}" for v, p in zip(out.variables, out.provenance)]
            Path(args.provenance).write_text("\n".join(rows) + "\n")
        return EXIT_OK

    if cmd == "graph":
        inst = terms.parse_instance(_read_input(args.input))
        nf, _ = normalize.normalise(inst)
        if args.labelled:
            graph = depgraph.build_labelled_depgraph(normalize.diversify(nf))
        else:
            graph = depgraph.build_dep_digraph(nf)
        text = depgraph.export_dot(graph) if args.format == "dot" else depgraph.edge_tsv(graph)
        _write_output(text, args.output)
        return EXIT_OK

    if cmd == "guess":
        inst = terms.parse_instance(_read_input(args.input))
        nf, _ = normalize.normalise(inst)
        div = normalize.diversify(nf)
        if args.labelled:
            graph = depgraph.build_labelled_depgraph(div)
        else:
            graph = depgraph.build_dep_digraph(div)
        if args.strategy:
            strat = guessing.parse_strategy(Path(args.strategy).read_text())
            count = (
                guessing.count_winning_labelled(graph, strat)
                if args.labelled
                else guessing.count_winning(graph, strat)
            )
            result = guessing.GuessingResult.from_count(count, strat.alphabet_size)
        else:
            result = guessing.max_winning_exhaustive(graph, args.n, budget=args.budget)
        gn = "-" if result.gn_at_n is None else f"{result.gn_at_n:.12g}"
        _write_output(f"{result.n}\t{result.count}\t{gn}\n", args.output)
        return EXIT_OK

    if cmd == "bound":
        inst = terms.parse_instance(_read_input(args.input))
        nf, _ = normalize.normalise(inst)
        div = normalize.diversify(nf)
        if args.unlabelled:
            graph = depgraph.build_dep_digraph(div)
        else:
            graph = depgraph.build_labelled_depgraph(div)
        lp = entropy.build_lp(graph)
        if args.emit_lp:
            Path(args.emit_lp).write_text(entropy.format_lp_cplex(lp))
        report = entropy.solve_lp(lp)
        if args.certificate:
            _write_output(entropy.format_bound_report(report, certificate=True), args.output)
        else:
            _write_output(f"{report.optimum}\n", args.output)
        return EXIT_OK

    if cmd == "search":
        inst = terms.parse_instance(_read_input(args.input))
        result = search.search_max(inst, args.n, _cfg(args))
        _write_output(search.result_tsv(result, args.n, args.n**inst.num_variables), args.output)
        return EXIT_OK

    if cmd == "dispersion":
        prob = search.parse_dispersion(_read_input(args.input))
        result = search.dispersion_max(prob, args.n, _cfg(args))
        ideal = min(args.n ** len(prob.variables), args.n ** len(prob.terms))
        _write_output(search.result_tsv(result, args.n, ideal), args.output)
        return EXIT_OK

    if cmd == "ilp":
        inst = terms.parse_instance(_read_input(args.input))
        _write_output(search.export_ilp(inst, args.n, target=args.target), args.output)
        return EXIT_OK

    if cmd == "case":
        text = cases.reproduce_table(args.name, row=args.row, all_rows=args.all, seed=args.seed)
        _write_output(text, args.output)
        return EXIT_OK

    raise AssertionError(f"unhandled command {cmd!r}")


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
