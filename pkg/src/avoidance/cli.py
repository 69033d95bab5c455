"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 inconclusive
verification, 4 builder error, 5 I/O error, 6 certificate error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import certificate, groups
from .construction import (ConfigurationFamily, ConstructionError, ProductCounterexample, build_counterexample)
from .density import (DensityEstimate, FolnerCapExceeded, IntervalFolner, density_along, folner_from_name,
                      parse_set)
from .numtheory import ScheduleExhausted, modulus_schedule, non_permutation_primes
from .polynomial import PolynomialError, parse_poly
from .search import verify_against_bounds

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_BUILD, EXIT_IO, EXIT_CERT = range(7)

PRESETS = {
    "straus": {"family": "ip", "ambient": "Z", "eps": "1/10", "shifts": 21, "folner": "N:100000"},
    "sumset-z2": {"family": "sumset", "k": 2, "ambient": "sum(Z/2)", "eps": "1/4", "shifts": 8, "folner": "box:12"},
    "sarkozy-x2": {"family": "poly-sum", "poly": "x^2", "ambient": "Z", "eps": "1/5", "shifts": 21,
                   "folner": "N:100000"},
    "sarkozy-binomial": {"family": "poly-sum", "poly": "x(x+1)/2", "ambient": "Z", "eps": "1/5", "shifts": 21,
                         "folner": "N:100000"},
    "product-sum": {"family": "product-sum", "ambient": "Z", "eps": "1/5", "shifts": 11, "folner": "N:100000"},
    "product": {"family": "product", "k_max": 3, "ambient": "N*", "eps": "1/2", "shifts": 24,
                "folner": "multiplicative:6"},
}

DEFAULT_WINDOWS = {"ip": "1:1000", "poly-sum": "1:2000", "product-sum": "1:300", "sumset": "support:10",
                   "product": "smooth:7:200"}


class UsageError(ValueError):
    pass


# -- argument types -------------------------------------------------------------------


def epsilon_type(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {text}")
    return value


def target_type(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"target must lie in (0, 1], got {text}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def parse_folner(text: str) -> tuple[str, int]:
    name, _, n = text.rpartition(":")
    if not name:
        raise UsageError(f"Folner spec {text!r} should look like NAME:N")
    try:
        return name, int(n)
    except ValueError as exc:
        raise UsageError(f"bad Folner index in {text!r}") from exc


def parse_shifts(text: str | None, ce) -> list:
    """``certified``, ``LO:HI`` (integers), ``first:N`` or a comma list (rationals, group dicts as JSON)."""
    if text is None or text == "certified":
        return [ce.shift(i) for i in range(ce.shift_budget)]
    if text.strip() == "":
        return []
    if text.startswith("first:"):
        return [ce.shift(i) for i in range(int(text.split(":", 1)[1]))]
    if text.startswith("["):
        kind = "product" if isinstance(ce, ProductCounterexample) else ce.family.kind
        return [certificate.decode_shift(x, kind) for x in json.loads(text)]
    if ":" in text and "/" not in text:
        lo, hi = (int(x) for x in text.split(":"))
        return list(range(lo, hi + 1))
    return [Fraction(x) if isinstance(ce, ProductCounterexample) else int(x) for x in text.split(",") if x]


def smooth_numbers(p_max: int, bound: int) -> list[int]:
    from .numtheory import primes_up_to
    out = [1]
    for p in primes_up_to(p_max):
        out = sorted({v * p**e for v in out for e in range(64) if v * p**e <= bound})
    return out


def parse_window(text: str, ce) -> list:
    """``LO:HI``, ``support:N`` (group elements supported in ``[0, N)``) or ``smooth:P:B``."""
    if text.startswith("support:"):
        if getattr(ce, "group", None) is None:
            raise UsageError("support windows need a group ambient")
        g = ce.group
        N = int(text.split(":", 1)[1])
        if any(g.modulus(i) == 0 for i in g.coordinates(N)):
            raise UsageError("support windows need a torsion group")
        return list(groups.box_elements(g, N))
    if text.startswith("smooth:"):
        _, p, b = text.split(":")
        return smooth_numbers(int(p), int(b))
    lo, hi = (int(x) for x in text.split(":"))
    return list(range(lo, hi + 1))


# -- commands ------------------------------------------------------------------------


def _family_from_args(args) -> tuple[ConfigurationFamily, groups.GroupDescriptor | None]:
    kind = args.family
    if kind == "poly-sum":
        if not args.poly:
            raise UsageError("poly-sum needs --poly")
        family = ConfigurationFamily(kind, poly=parse_poly(args.poly))
    elif kind in ("sumset", "product"):
        family = ConfigurationFamily(kind, args.k)
    else:
        family = ConfigurationFamily(kind)
    group = None
    if kind == "sumset":
        group = groups.parse_group(args.ambient or "Z")
    elif args.ambient not in (None, "Z", "N", "N*"):
        raise UsageError(f"family {kind} lives on the integers, not {args.ambient}")
    return family, group


def _apply_preset(args) -> None:
    if not getattr(args, "preset", None):
        return
    preset = PRESETS[args.preset]
    for key, value in preset.items():
        if getattr(args, key, None) is None:
            if key == "eps":
                value = epsilon_type(value)
            setattr(args, key, value)


def _density(ce, folner_text: str | None) -> DensityEstimate | None:
    if not folner_text:
        return None
    _, N = parse_folner(folner_text)
    return ce.density(N)


def cmd_build(args) -> int:
    _apply_preset(args)
    if args.family is None or args.eps is None:
        raise UsageError("build needs --family and --eps (or --preset)")
    family, group = _family_from_args(args)
    T = args.shifts or 21
    try:
        ce = build_counterexample(family, args.eps, group=group, shift_budget=T, k_max=args.k_max or 2)
        density = _density(ce, args.folner)
        body = certificate.certificate_from(ce, density=density, floor=1 - args.eps, seed=args.seed)
    except (ConstructionError, ScheduleExhausted, FolnerCapExceeded, PolynomialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    text = certificate.dumps(body)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    Ms = [e["M"] for e in body["entries"]]
    summary = {
        "certificate": args.out,
        "certified_shifts": T,
        "M_min": min(Ms) if Ms else None,
        "M_max": max(Ms) if Ms else None,
        "seed": args.seed,
    }
    if "density_check" in body:
        summary["density"] = body["density_check"]
    print(json.dumps(summary, sort_keys=True, default=str))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        body = certificate.read(args.certificate)
    except OSError as exc:
        print(f"error: cannot read {args.certificate}: {exc}", file=sys.stderr)
        return EXIT_IO
    except certificate.CertificateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT
    try:
        ce = certificate.rebuild(body)
        certificate.cross_check(body, ce)
    except certificate.CertificateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ConstructionError, ScheduleExhausted, PolynomialError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    kind = body["family"]["kind"]
    shifts = parse_shifts(args.shifts, ce)
    window_text = args.window or DEFAULT_WINDOWS[kind]
    window = parse_window(window_text, ce)
    try:
        table = verify_against_bounds(ce, shifts, window, bounds=certificate.stated_bounds(body),
                                      work_budget=args.work_budget)
    except ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    for row in table.rows:
        order = "" if row.order is None else f" k={row.order}"
        print(f"t={certificate.encode_shift(row.shift)}{order} M={row.bound} found={row.size} "
              f"upper={row.upper_bound} ({row.bound_source}) {row.status}")
    result = table.as_dict()
    result.update({"window": window_text, "seed": body.get("seed", 0)})
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(result, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    status = "fail" if table.failed else ("pass" if table.passed else "inconclusive")
    print(f"verify: {len(table.rows)} rows, {status}")
    if table.failed:
        return EXIT_FAIL
    return EXIT_OK if table.passed else EXIT_INCONCLUSIVE


def cmd_primes(args) -> int:
    report = non_permutation_primes(parse_poly(args.poly), args.bound)
    print(json.dumps(report.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_density(args) -> int:
    a = parse_set(args.set)
    name, N = parse_folner(args.folner)
    phi = folner_from_name(name, getattr(a, "ambient", None))
    est = density_along(a, phi, N, args.n_min)
    out = {"set": args.set, "folner": phi.name, "N": N, "count": est.count, "size": est.size,
           "ratio": str(est.ratio), "value": float(est.ratio)}
    if getattr(a, "exact_density", None) is not None:
        out["exact_density"] = str(a.exact_density)
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_schedule(args) -> int:
    from .polynomial import X
    poly = parse_poly(args.poly)
    q = poly + X if args.add_x else poly
    try:
        s = modulus_schedule(q, args.target, args.prime_bound)
    except ScheduleExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    print(json.dumps({"poly": str(q), "target": str(args.target), "modulus": str(s.modulus), "primes": s.primes,
                      "image_size": s.image_size, "density": str(s.density)}, sort_keys=True))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avoidance", description="Build and verify avoidance certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a counterexample and write its certificate")
    b.add_argument("--preset", choices=sorted(PRESETS))
    b.add_argument("--family", choices=["ip", "sumset", "product", "poly-sum", "product-sum"])
    b.add_argument("--ambient", help="Z, N*, or a group such as sum(Z/2)")
    b.add_argument("--k", type=positive_int, default=2)
    b.add_argument("--k-max", dest="k_max", type=positive_int)
    b.add_argument("--poly")
    b.add_argument("--eps", type=epsilon_type)
    b.add_argument("--shifts", type=positive_int, help="number of certified shifts T")
    b.add_argument("--folner", help="density check, e.g. N:100000, box:12, multiplicative:6")
    b.add_argument("--out", help="certificate path")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="check a certificate's bounds with the search oracle")
    v.add_argument("certificate")
    v.add_argument("--shifts", help="certified | LO:HI | first:N | comma list | JSON list")
    v.add_argument("--window", help="LO:HI | support:N | smooth:P:B")
    v.add_argument("--work-budget", dest="work_budget", type=positive_int, default=200_000)
    v.add_argument("--out", help="write the table as JSON")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("primes", help="classify primes by whether the polynomial permutes Z/p")
    p.add_argument("--poly", required=True)
    p.add_argument("--bound", type=positive_int, default=100)
    p.set_defaults(func=cmd_primes)

    d = sub.add_parser("density", help="density of a set along a Folner sequence")
    d.add_argument("--set", required=True)
    d.add_argument("--folner", required=True)
    d.add_argument("--n-min", dest="n_min", type=positive_int, default=1)
    d.set_defaults(func=cmd_density)

    s = sub.add_parser("schedule", help="greedy squarefree modulus reaching a target density")
    s.add_argument("--poly", required=True)
    s.add_argument("--target", type=target_type, required=True)
    s.add_argument("--add-x", dest="add_x", action="store_true", help="schedule P(x) + x instead of P")
    s.add_argument("--prime-bound", dest="prime_bound", type=positive_int, default=100_000)
    s.set_defaults(func=cmd_schedule)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, PolynomialError, groups.GroupError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
