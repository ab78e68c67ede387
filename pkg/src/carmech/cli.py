"""``car`` command-line tool.

Exit codes: 0 success (or a positive verdict), 1 domain error or negative
verdict, 2 input error (unreadable file, parse error, normalization failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import formats
from .core import CarMechanism, MechanismError, SampleSpace
from .fibonacci import FibonacciError, fib, fib_matrix, fib_solution
from .formats import ParseError, format_fraction, frac_json, render, subset_json, to_json
from .multicover import (
    SEARCH_CAP,
    from_multicover,
    height,
    is_extreme_multicover,
    sub_multicover_search,
    to_multicover,
)
from .polytope import (
    ENUMERATION_CAP,
    decompose,
    enumerate_extremes,
    is_ccar,
    is_extreme,
    rationalize,
)
from .simulate import ProceduralModel, model_mechanism, validate
from .verify import is_car, to_car

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load(path: str, allow_decimal: bool = False) -> formats.Document:
    try:
        return formats.load_document(_read(path), allow_decimal)
    except (ParseError, MechanismError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _build(path: str, builder):
    try:
        return builder()
    except (ParseError, MechanismError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _support_str(mech: CarMechanism) -> str:
    return ",".join(str(a) for a in mech.probs)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text.rstrip("\n"))


def _car_from_doc(doc: formats.Document, path: str) -> CarMechanism:
    if doc.kind == "car":
        return _build(path, doc.car)
    if doc.kind == "conditional":
        return _build(path, lambda: to_car(doc.conditional()))
    if doc.kind == "multicover":
        return from_multicover(_build(path, doc.multicover))
    return model_mechanism(_build(path, doc.model))


def cmd_verify(args) -> int:
    doc = _load(args.file)
    if doc.kind not in ("car", "conditional"):
        raise InputError(f"{args.file}: expected a mechanism document, got {doc.kind}")
    mech = _build(args.file, doc.conditional)
    check = is_car(mech)
    if not check:
        w = check.witness
        _emit(args, {"car": False, "witness": {"set": subset_json(w.subset), "x": w.x, "x_other": w.x_other,
                                                "p": frac_json(w.p), "p_other": frac_json(w.p_other)}},
              f"CAR: no; {w}")
        return EXIT_DOMAIN
    car = to_car(mech)
    extreme = is_extreme(car)
    ccar = is_ccar(car).ok if car.space.n <= ENUMERATION_CAP else None
    ccar_text = "n/a" if ccar is None else ("yes" if ccar else "no")
    summary = (f"CAR: yes; support {_support_str(car)}; extreme: {'yes' if extreme else 'no'}; "
               f"CCAR: {ccar_text}")
    _emit(args, {"car": True, "extreme": extreme, "ccar": ccar,
                 "support": [subset_json(a) for a in car.probs], "mechanism": to_json(car)},
          summary + "\n" + render(car))
    return EXIT_OK


def _describe(mech: CarMechanism) -> str:
    return ", ".join(f"{a} {format_fraction(p)}" for a, p in mech.probs.items())


def cmd_extremes(args) -> int:
    space = SampleSpace(args.n)
    catalog = enumerate_extremes(space)
    lines = [f"{len(catalog)} extreme mechanisms on n={args.n}"]
    for mech in catalog:
        lines.append(f"height {height(mech)}: {_describe(mech)}")
    _emit(args, {"n": args.n, "count": len(catalog),
                 "extremes": [{"height": height(m), "mechanism": to_json(m)} for m in catalog]},
          "\n".join(lines))
    return EXIT_OK


def cmd_decompose(args) -> int:
    mech = _car_from_doc(_load(args.file), args.file)
    dec = decompose(mech)
    exact = dec.remix() == mech
    lines = [f"{len(dec)} extreme terms; remix exact: {'yes' if exact else 'no'}"]
    for term in dec:
        lines.append(f"weight {format_fraction(term.weight)}  height {height(term.mechanism)}  "
                     f"support {_support_str(term.mechanism)}  [{_describe(term.mechanism)}]")
    _emit(args, {"exact": exact, "terms": [
        {"weight": frac_json(t.weight), "height": height(t.mechanism), "extreme": t.extreme,
         "mechanism": to_json(t.mechanism)} for t in dec]}, "\n".join(lines))
    return EXIT_OK if exact else EXIT_DOMAIN


def cmd_multicover(args) -> int:
    doc = _load(args.file)
    if doc.kind == "multicover":
        mc = _build(args.file, doc.multicover)
        mech = from_multicover(mc)
        extreme = is_extreme_multicover(mc)
        sub = sub_multicover_search(mc) if mc.total <= SEARCH_CAP else None
        lines = [f"height {mc.height}; extreme: {'yes' if extreme else 'no'}"]
        if mc.total <= SEARCH_CAP:
            lines.append("sub-multicover: " + ("none" if sub is None else
                                                f"k={sub.height} " + " ".join(
                                                    f"{a}x{c}" for a, c in sub.multiplicities.items())))
        lines.append(render(mech))
        _emit(args, {"height": mc.height, "extreme": extreme,
                     "sub_multicover": None if sub is None else to_json(sub),
                     "mechanism": to_json(mech)}, "\n".join(lines))
        return EXIT_OK
    mech = _car_from_doc(doc, args.file)
    mc = to_multicover(mech)
    _emit(args, to_json(mc), render(mc))
    return EXIT_OK


def cmd_ccar(args) -> int:
    mech = _car_from_doc(_load(args.file), args.file)
    check = is_ccar(mech)
    if not check:
        _emit(args, {"ccar": False}, "CCAR: no")
        return EXIT_DOMAIN
    lines = ["CCAR: yes"]
    for term in check.decomposition:
        lines.append(f"weight {format_fraction(term.weight)}  partition {' '.join(map(str, term.mechanism.probs))}")
    _emit(args, {"ccar": True, "partitions": [
        {"weight": frac_json(t.weight), "blocks": [subset_json(a) for a in t.mechanism.probs]}
        for t in check.decomposition]}, "\n".join(lines))
    return EXIT_OK


def cmd_fibonacci(args) -> int:
    matrix = fib_matrix(args.n)
    lines = [f"S_{args.n}:", str(matrix)]
    payload = {"n": args.n, "matrix": [list(r) for r in matrix.rows]}
    if args.verify:
        sol = fib_solution(args.n)
        lines.append("z = (" + ", ".join(map(format_fraction, sol.z)) + ")")
        lines.append(f"height = {sol.height} = F_{args.n}, Fibonacci closed form verified")
        payload.update({"z": [frac_json(v) for v in sol.z], "height": sol.height,
                        "fibonacci": fib(args.n), "verified": True})
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load(args.file)
    if doc.kind in ("multicover", "model"):
        model = _build(args.file, doc.model)
    else:
        model = ProceduralModel.from_decomposition(decompose(_car_from_doc(doc, args.file)))
    report = validate(model, args.samples, args.seed)
    lines = [f"seed {report.seed}; {report.samples} samples per element"]
    for e in report.elements:
        crit = "inf" if e.df == 0 else f"{e.critical:.4f}"
        lines.append(f"x={e.x}: chi2 {e.statistic:.4f} df {e.df} critical {crit} "
                     f"{'FLAGGED' if e.flagged else 'ok'}")
        for a, p in e.expected.items():
            lines.append(f"  {a} count {e.counts.get(a, 0)} freq {e.frequency(a):.5f} "
                         f"expected {format_fraction(p)}")
    lines += [f"warning: {w}" for w in report.warnings]
    lines.append("gate: " + ("pass" if report.passed else "FAIL"))
    payload = {"seed": report.seed, "samples": report.samples, "passed": report.passed,
               "warnings": list(report.warnings), "elements": [
                   {"x": e.x, "statistic": e.statistic, "df": e.df,
                    "critical": None if e.df == 0 else e.critical, "flagged": e.flagged,
                    "cells": [{"set": subset_json(a), "count": e.counts.get(a, 0), "expected": frac_json(p)}
                              for a, p in e.expected.items()]} for e in report.elements]}
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_DOMAIN


def cmd_rationalize(args) -> int:
    if args.epsilon is None:
        raise InputError("rationalize needs --epsilon")
    doc = _load(args.file, allow_decimal=args.from_decimal)
    if doc.kind != "car":
        raise InputError(f"{args.file}: expected a mechanism document with 'set ... p ...' lines")
    mech = rationalize(doc.probs, args.epsilon)
    _emit(args, to_json(mech), render(mech))
    return EXIT_OK


def _fraction_arg(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a fraction p/q, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    parser = argparse.ArgumentParser(prog="car", description="Exact analysis of coarsening-at-random mechanisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="check the CAR property of a mechanism file")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extremes", parents=[common], help="list all extreme CAR mechanisms")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_extremes)

    for name, func, text in [
        ("decompose", cmd_decompose, "write a mechanism as a mixture of extremes"),
        ("multicover", cmd_multicover, "convert between mechanisms and uniform multicovers"),
        ("ccar", cmd_ccar, "decide coarsening completely at random"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("file")
        p.set_defaults(func=func)

    p = sub.add_parser("fibonacci", parents=[common], help="print S_n and optionally verify its solution")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_fibonacci)

    p = sub.add_parser("simulate", parents=[common], help="simulate a model and run the chi-square gate")
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rationalize", parents=[common], help="exact mechanism near a decimal one")
    p.add_argument("file")
    p.add_argument("--from-decimal", action="store_true", help="accept decimal probabilities")
    p.add_argument("--epsilon", type=_fraction_arg)
    p.set_defaults(func=cmd_rationalize)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "seed", 0) is not None and getattr(args, "seed", 0) < 0:
        print("car: error: --seed must be a nonnegative 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"car: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MechanismError, FibonacciError) as exc:
        print(f"car: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
