"""Command-line front end: ``indexrate <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from ._bits import fmt_subset
from .bounds import GuardError, dsm_plus_dp
from .capm import format_trace, run_capm
from .generators import GENERATORS, SUITE, SUITE_NOTES, fixture_text
from .instance import InstanceError, ParseError, classify, normalize, parse_instance, render_instance
from .oracle import DEFAULT_MAX_BITS, exact_scalar_linear
from .report import build_report, decimal_text, fraction_text, message_summary
from .scapm import format_theta_trace, run_scapm

EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_GUARD = 0, 1, 2, 3


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    # subparsers get SUPPRESS defaults so flags before the subcommand survive
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
    p.add_argument("--trace", action="store_true", default=d(False), help="print step traces")
    p.add_argument("--no-normalize", action="store_true", default=d(False), help="skip purge/merge")
    p.add_argument("--strict", action="store_true", default=d(False), help="exit 3 on guard violations")
    p.add_argument("--max-oracle-bits", type=int, default=d(DEFAULT_MAX_BITS), metavar="N")
    p.add_argument("--seed", type=int, default=d(0), help="seed for generate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indexrate", description="Rates and bounds for groupcast index coding.", allow_abbrev=False
    )
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("analyze", "classify an instance"),
        ("bound", "DSM+ lower bound with witness order"),
        ("capm", "integer CAPM rate and message table"),
        ("scapm", "fractional S-CAPM rate"),
        ("exact", "minimum binary scalar-linear rate"),
    ]:
        sp = sub.add_parser(name, help=text, allow_abbrev=False)
        _add_globals(sp, suppress=True)
        sp.add_argument("path")
    sp = sub.add_parser("check", help="full report with optimality certificate", allow_abbrev=False)
    _add_globals(sp, suppress=True)
    sp.add_argument("path", nargs="?")
    sp.add_argument("--paper-suite", action="store_true", help="run the bundled reference fixtures")
    sp = sub.add_parser("generate", help="write a generated instance", allow_abbrev=False)
    _add_globals(sp, suppress=True)
    sp.add_argument("kind", choices=sorted(GENERATORS))
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--s", type=int, default=0)
    sp.add_argument("-o", "--output", help="file to write (default stdout)")
    return parser


def _load(args):
    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"{args.path}: {exc.strerror}") from exc
    inst = parse_instance(text)
    warnings: list[str] = []
    if not args.no_normalize:
        inst, warnings = normalize(inst)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return inst, warnings


def _emit(args, data: dict, text: str) -> None:
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n" if args.json else text)


def cmd_analyze(args) -> int:
    inst, warnings = _load(args)
    c = classify(inst)
    line = (
        f"m={inst.m} s={inst.s} gm2_form={str(c.is_gm2_form).lower()} dag={str(c.is_dag).lower()} "
        f"directed_cycle={str(c.is_directed_cycle).lower()} unicast={str(c.is_unicast).lower()}\n"
    )
    data = {"m": inst.m, "s": inst.s, **asdict(c), "warnings": warnings}
    _emit(args, data, line)
    return EXIT_OK


def cmd_bound(args) -> int:
    inst, _ = _load(args)
    w = dsm_plus_dp(inst)
    text = f"lower {w.value}\norder {' '.join(map(str, w.permutation))}\nterms {' '.join(map(str, w.terms))}\n"
    _emit(args, {"lower": w.value, "permutation": list(w.permutation), "terms": list(w.terms)}, text)
    return EXIT_OK


def cmd_capm(args) -> int:
    inst, _ = _load(args)
    run = run_capm(inst)
    text = f"rate {run.rate}\nstage rates {' '.join(map(str, run.stage_rates))}\n"
    text += "".join(f"  {line}\n" for line in run.table.describe(inst))
    if args.trace:
        text += format_trace(inst, run.trace)
    data = {
        "rate": run.rate,
        "stage_rates": list(run.stage_rates),
        "messages": message_summary(inst, run.table),
    }
    if args.trace:
        data["trace"] = format_trace(inst, run.trace).splitlines()
    _emit(args, data, text)
    return EXIT_OK


def cmd_scapm(args) -> int:
    inst, _ = _load(args)
    run = run_scapm(inst)
    text = f"rate {fraction_text(run.rate)} ({decimal_text(run.rate)})\nt {run.t}\n"
    text += "".join(
        f"  theta({fmt_subset(subset)}, {inst.bits[k - 1].label}) = {fraction_text(v)}\n"
        for subset, k, v in run.theta.entries()
    )
    if args.trace:
        text += format_theta_trace(inst, run.trace, run.plan.instance)
    data = {
        "rate": {"numerator": run.rate.numerator, "denominator": run.rate.denominator},
        "t": run.t,
        "theta": [
            {"subset": fmt_subset(subset), "bit": inst.bits[k - 1].label, "value": fraction_text(v)}
            for subset, k, v in run.theta.entries()
        ],
    }
    if args.trace:
        data["trace"] = format_theta_trace(inst, run.trace, run.plan.instance).splitlines()
    _emit(args, data, text)
    return EXIT_OK


def cmd_exact(args) -> int:
    inst, _ = _load(args)
    try:
        r, code = exact_scalar_linear(inst, args.max_oracle_bits)
    except GuardError as exc:
        print(f"guard: {exc}", file=sys.stderr)
        _emit(args, {"rate": None, "skipped": str(exc)}, f"skipped: {exc}\n")
        return EXIT_GUARD if args.strict else EXIT_OK
    rows = code.row_strings()
    text = f"rate {r}\n" + "".join(f"  {row}\n" for row in rows)
    _emit(args, {"rate": r, "rows": rows, "pivots": list(code.pivots)}, text)
    return EXIT_OK


def _suite_actual(name: str, args) -> dict:
    inst, _ = normalize(parse_instance(fixture_text(name)))
    rep = build_report(inst, max_oracle_bits=args.max_oracle_bits)
    capm = run_capm(inst)
    return {
        "lower": rep.lower,
        "capm": rep.capm,
        "capm_after_step2": capm.stage_rates[1],
        "scapm": fraction_text(rep.scapm),
        "t": rep.scapm_t,
        "oracle": rep.oracle,
        "certified": rep.certified_optimal,
    }


def cmd_paper_suite(args) -> int:
    failures = 0
    rows = []
    for name, expected in SUITE.items():
        actual = _suite_actual(name, args)
        for key, want in expected.items():
            got = actual[key]
            ok = got == want
            failures += not ok
            rows.append({"fixture": name, "quantity": key, "expected": want, "actual": got, "ok": ok})
    lines = [
        f"{'PASS' if r['ok'] else 'FAIL'}  {r['fixture']:<24} {r['quantity']:<18} expected {r['expected']}  got {r['actual']}"
        for r in rows
    ]
    lines += [f"note  {name}: {text}" for name, text in SUITE_NOTES.items()]
    lines.append(f"{len(rows) - failures}/{len(rows)} checks passed")
    _emit(args, {"checks": rows, "notes": SUITE_NOTES, "failures": failures}, "\n".join(lines) + "\n")
    return EXIT_MISMATCH if failures else EXIT_OK


def cmd_check(args) -> int:
    if args.paper_suite:
        return cmd_paper_suite(args)
    if not args.path:
        raise InstanceError("check needs a path or --paper-suite")
    inst, warnings = _load(args)
    rep = build_report(inst, warnings, args.max_oracle_bits)
    _emit(args, rep.to_dict(), rep.render())
    if rep.oracle_skipped:
        print(f"guard: oracle {rep.oracle_skipped}", file=sys.stderr)
        if args.strict:
            return EXIT_GUARD
    return EXIT_OK


def cmd_generate(args) -> int:
    inst = GENERATORS[args.kind](args.m, args.s, args.seed)
    text = render_instance(inst)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "bound": cmd_bound,
    "capm": cmd_capm,
    "scapm": cmd_scapm,
    "exact": cmd_exact,
    "check": cmd_check,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
