"""Certificates: a magic line followed by canonical JSON.

The body records the build parameters and, per certified shift, the divisor,
its exact density and budget, the cover cutoff, the exceptional count and the
finitary bound.  Serialisation is deterministic (sorted keys, fractions as
strings) so repeated builds produce byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import groups
from .construction import (ConfigurationFamily, Counterexample, ProductCounterexample, build_counterexample)
from .density import DensityEstimate, ResidueClassUnion
from .groups import BoxSubgroup, GroupElement
from .polynomial import parse_poly

MAGIC = "SUMSET-AVOIDANCE-CERTIFICATE"
VERSION = 1

RULES = {
    "enumeration": "shifts in zig-zag order 0,1,-1,2,-2,... on Z; box blocks in zig-zag lexicographic order on groups",
    "budget": "eps * 2^-(i+1) for the shift at position i (product orders k use eps * 2^-k in place of eps)",
    "cutoff": "k_1 = 1, k_n least K > k_(n-1) with sum_(j<=n) err(j, K) <= 1/n",
    "error": "residue unions: min(1, (|R| - delta)/K); box cosets: min(1, prod_(constrained i<K) r_i(K) - delta)",
    "bound": "M = I * (E + c)",
}


class CertificateError(ValueError):
    pass


class CertificateMismatch(CertificateError):
    pass


# -- encoding helpers -------------------------------------------------------------


def encode_shift(t) -> Any:
    if isinstance(t, GroupElement):
        return {str(i): v for i, v in t.support}
    if isinstance(t, Fraction):
        return str(t)
    return int(t)


def decode_shift(data, kind: str):
    if isinstance(data, dict):
        return GroupElement(tuple(sorted((int(i), int(v)) for i, v in data.items())))
    if kind == "product":
        return Fraction(data)
    return int(data)


def encode_divisor(d) -> dict:
    if isinstance(d, ResidueClassUnion):
        return {"type": "residues", "modulus": str(d.modulus),
                "factors": [[m, sorted(R)] for m, R in sorted(d.factors)]}
    if isinstance(d, BoxSubgroup):
        return {"type": "box-subgroup", "constraints": [[i, m] for i, m in d.constraints]}
    raise CertificateError(f"cannot encode divisor {d!r}")


def _entry_record(ce: Counterexample, i: int, order: int | None = None, outer: ProductCounterexample | None = None) -> dict:
    entry = ce.entry(i)
    if outer is None:
        E, exact = ce.exceptional(i)
        M = ce.finitary_bound(i)
        cutoff = ce.cutoff(i)
        shift = entry.shift
    else:
        E, exact = outer.exceptional(order, i)
        M = outer.finitary_bound(order, i)
        cutoff = ce.cutoff(i)
        shift = outer.shift(i)
    record = {
        "position": i,
        "shift": encode_shift(shift),
        "divisor": encode_divisor(entry.divisor),
        "density": str(entry.density),
        "budget": str(entry.budget),
        "cutoff": cutoff,
        "partition_index": entry.partition_index,
        "c_family": entry.slack,
        "exceptional": E,
        "exceptional_exact": exact,
        "M": M,
    }
    if order is not None:
        record["order"] = order
    return record


def _family_record(family: ConfigurationFamily) -> dict:
    return family.describe()


def certificate_from(ce, *, density: DensityEstimate | None = None, floor: Fraction | None = None,
                     seed: int = 0) -> dict:
    """Certificate body for a built counterexample."""
    body: dict[str, Any] = {
        "version": VERSION,
        "epsilon": str(ce.epsilon),
        "shift_budget": ce.shift_budget,
        "seed": seed,
        "rules": dict(RULES),
    }
    if isinstance(ce, ProductCounterexample):
        body.update({
            "family": {"kind": "product", "k_max": ce.k_max},
            "ambient": "N*",
            "folner": ce.folner.name,
            "outer_cutoffs": {str(k): ce.outer_cutoff(k) for k in ce.orders},
        })
        body["entries"] = [_entry_record(sub, i, k, ce) for k, sub in ce.orders.items() for i in range(ce.shift_budget)]
    else:
        body.update({
            "family": _family_record(ce.family),
            "ambient": ce.ambient if ce.group is None else groups.format_group(ce.group),
            "folner": ce.folner.name,
        })
        body["entries"] = [_entry_record(ce, i) for i in range(ce.shift_budget)]
    if density is not None:
        check = {
            "N": density.N_max,
            "count": density.count,
            "size": density.size,
            "ratio": str(density.ratio),
        }
        if floor is not None:
            check["floor"] = str(floor)
            check["meets_floor"] = density.ratio >= floor
            check["empirical_N0"] = density.first_index_staying_at_least(floor)
        analytic = ce.analytic_floor() if isinstance(ce, Counterexample) else None
        check["analytic_N0"] = analytic
        body["density_check"] = check
    return body


def dumps(body: dict) -> str:
    return f"{MAGIC} v{body.get('version', VERSION)}\n" + json.dumps(body, sort_keys=True, indent=1) + "\n"


def loads(text: str) -> dict:
    head, _, rest = text.partition("\n")
    parts = head.split()
    if len(parts) != 2 or parts[0] != MAGIC or not parts[1].startswith("v"):
        raise CertificateError("missing certificate header")
    try:
        version = int(parts[1][1:])
    except ValueError as exc:
        raise CertificateError(f"bad version tag {parts[1]!r}") from exc
    if version != VERSION:
        raise CertificateError(f"unsupported certificate version {version}")
    try:
        body = json.loads(rest)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"certificate body is not JSON: {exc}") from exc
    for key in ("family", "ambient", "epsilon", "shift_budget", "entries"):
        if key not in body:
            raise CertificateError(f"certificate lacks {key!r}")
    return body


def write(path: str | Path, body: dict) -> None:
    Path(path).write_text(dumps(body), encoding="utf-8")


def read(path: str | Path) -> dict:
    return loads(Path(path).read_text(encoding="utf-8"))


# -- rebuilding and cross-checking ---------------------------------------------------


def family_from_record(record: dict) -> ConfigurationFamily:
    kind = record["kind"]
    if kind == "poly-sum":
        return ConfigurationFamily(kind, poly=parse_poly(record["poly"]))
    if kind in ("sumset", "product"):
        return ConfigurationFamily(kind, int(record.get("k", 2)))
    return ConfigurationFamily(kind)


def rebuild(body: dict):
    """Counterexample rebuilt from the certificate's parameters alone."""
    fam = body["family"]
    epsilon = Fraction(body["epsilon"])
    T = int(body["shift_budget"])
    if fam["kind"] == "product":
        return build_counterexample(ConfigurationFamily("product", 2), epsilon, shift_budget=T,
                                    k_max=int(fam["k_max"]))
    family = family_from_record(fam)
    group = None if body["ambient"] == "N" else groups.parse_group(body["ambient"])
    return build_counterexample(family, epsilon, group=group, shift_budget=T)


def cross_check(body: dict, ce) -> None:
    """Raise ``CertificateMismatch`` unless every listed entry (except ``M``) matches a fresh rebuild.

    ``M`` is left to the verifier: a stated bound that the oracle contradicts
    shows up as a failure rather than a parse error.
    """
    fresh = certificate_from(ce)
    expected = {(e["position"], e.get("order")): e for e in fresh["entries"]}
    for e in body["entries"]:
        key = (e.get("position"), e.get("order"))
        if key not in expected:
            raise CertificateMismatch(f"entry {key} is not part of the rebuilt certificate")
        ref = expected[key]
        for field_name, value in ref.items():
            if field_name == "M":
                continue
            if e.get(field_name) != value:
                raise CertificateMismatch(f"entry {key}: {field_name} is {e.get(field_name)!r}, rebuild gives {value!r}")


def stated_bounds(body: dict) -> dict:
    """``{(position, order): M}`` as written in the certificate."""
    return {(int(e["position"]), e.get("order")): int(e["M"]) for e in body["entries"]}
