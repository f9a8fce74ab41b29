"""``mpcong`` command line: params, phi, scan, hecke, verify.

Exit codes: 0 ok, 2 input error, 3 identity failure, 4 hypothesis
violation, 5 oracle counterexample.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .cache import SeriesCache, use_cache
from .certificates import CertificateError, CongruenceCertificate
from .congruence import (
    IdentityFailure,
    InsufficientTruncation,
    ParameterError,
    default_trunc,
    derive_params,
    scan_cell,
    solve_phi,
    sturm_bound,
)
from .hecke import DEFAULT_ORDER_CAP, HeckeSystem, HypothesisError, OrderCapExceeded, certify, check_hypotheses
from .oracle import OracleBudgetError, verify_hecke_instance, verify_hecke_periodicity, verify_progression
from .reports import ReportDocument
from .series import SeriesError, is_prime

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IDENTITY = 3
EXIT_HYPOTHESIS = 4
EXIT_COUNTEREXAMPLE = 5

TABLE1_R = tuple(range(2, 8))
TABLE1_M = (5, 7, 11, 13, 17, 19)


class InputError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """``"5"``, ``"2-7"``, ``"5,7,11"`` or a mix like ``"2-4,9"``.  Empty text is an empty range."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            try:
                a, b = int(lo), int(hi)
            except ValueError:
                raise InputError(f"bad range {part!r}") from None
            out.extend(range(a, b + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise InputError(f"bad integer {part!r}") from None
    return sorted(set(out))


# ---------------------------------------------------------------------------
# Commands


def cmd_params(args) -> tuple[ReportDocument, int]:
    p = derive_params(args.m, args.k, args.r)
    payload = p.as_dict()
    payload["weight_F"] = str(p.weight_F)
    payload["default_trunc"] = default_trunc(p)
    return ReportDocument("params", payload), EXIT_OK


def _phi_row(m: int, k: int, r: int, N: int | None, sturm: bool) -> dict:
    p = derive_params(m, k, r)
    if sturm:
        N = max(sturm_bound(p), default_trunc(p), N or 0)
    phi = solve_phi(p, N)
    return {"m": m, "k": k, "r": r, "beta": p.beta, "gamma": p.gamma, "phi": phi.as_dict()}


def cmd_phi(args) -> tuple[ReportDocument, int]:
    if args.table1:
        cells = [(m, 1, r) for r in TABLE1_R for m in TABLE1_M]
    else:
        if None in (args.m, args.k, args.r):
            raise InputError("phi needs --m, --k and --r (or --table1)")
        cells = [(args.m, args.k, args.r)]
    rows = [_phi_row(m, k, r, args.N, args.sturm) for m, k, r in cells]
    return ReportDocument("phi-table", {"rows": rows}, {"sturm_requested": bool(args.sturm)}), EXIT_OK


def _scan_one(cell: tuple[int, int, int]) -> dict:
    return scan_cell(*cell).as_dict()


def cmd_scan(args) -> tuple[ReportDocument, int]:
    rs, ms, ks = parse_range(args.r), parse_range(args.m), parse_range(args.k)
    ms = [m for m in ms if m >= 5 and is_prime(m)]
    cells = [(m, k, r) for r in rs for k in ks for m in ms]
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_scan_one, cells))
    else:
        results = [_scan_one(c) for c in cells]
    congruences = []
    for res in results:
        cert = res["certificate"]
        if cert is None:
            continue
        if not args.unverified and not all(v["passed"] for v in cert["verifications"]):
            continue
        congruences.append(res)
    payload = {
        "r_range": rs, "m_range": ms, "k_range": ks, "cells": len(cells),
        "congruences": congruences,
    }
    return ReportDocument("ramanujan-scan", payload, {"probe": "progression nonvanishing, then sturm-grade solve"}), EXIT_OK


def cmd_hecke(args) -> tuple[ReportDocument, int]:
    p = derive_params(args.m, args.k, args.r)
    ells = parse_range(args.ell)
    if not ells:
        raise InputError("--ell must name at least one prime")
    if args.primes_only:
        ells = [e for e in ells if is_prime(e) and e not in (2, 3, p.m)]
    systems, certs = [], []
    for ell in ells:
        check_hypotheses(p, ell)
        sys_ = HeckeSystem.build(p, ell, reduced=args.basis == "miller", cap=args.cap)
        systems.append(sys_.as_dict())
        if not args.no_certificates:
            for c in certify(sys_, oracle_n_max=args.oracle_n, index_budget=args.oracle_budget):
                if args.unverified or (c.verified and all(v.passed for v in c.verifications)):
                    certs.append(c.to_dict())
    payload = {"m": p.m, "k": p.k, "r": p.r, "gamma": p.gamma, "lambda": p.lam, "systems": systems, "certificates": certs}
    return ReportDocument("hecke", payload), EXIT_OK


def _load_certificates(path: str) -> list[CongruenceCertificate]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CertificateError(f"cannot read {path}: {exc}") from exc
    if isinstance(data, dict) and "payload" in data:
        pay = data["payload"]
        items = list(pay.get("certificates", []))
        items += [c["certificate"] for c in pay.get("congruences", []) if c.get("certificate")]
    elif isinstance(data, list):
        items = data
    else:
        items = [data]
    if not items:
        raise CertificateError(f"{path} contains no certificates")
    return [CongruenceCertificate.from_dict(d) for d in items]


def verify_certificate(cert: CongruenceCertificate, n_max: int, budget: int) -> dict:
    p = derive_params(cert.m, cert.k, cert.r)
    try:
        if cert.kind == "ramanujan":
            rep = verify_progression(cert.modulus, cert.beta, cert.modulus, cert.r, n_max)
        elif cert.kind == "hecke-vanishing":
            rep = verify_hecke_instance(p, cert.ell, cert.exponent, n_max, budget=budget)
        else:
            rep = verify_hecke_periodicity(p, cert.ell, 0, cert.exponent, n_max, budget=budget)
    except OracleBudgetError as exc:
        return {"description": cert.statement(), "ok": None, "checked": 0, "max_index": 0,
                "counterexample": None, "skipped": str(exc), "modulus": cert.modulus}
    return rep.to_dict()


def cmd_verify(args) -> tuple[ReportDocument, int]:
    if args.cert:
        certs = _load_certificates(args.cert)
    else:
        if None in (args.m, args.k, args.r):
            raise InputError("verify needs --cert FILE or --m/--k/--r")
        p = derive_params(args.m, args.k, args.r)
        beta = p.beta if args.beta is None else args.beta
        if args.kind != "ramanujan" and (args.ell is None or args.order is None):
            raise InputError(f"--kind {args.kind} needs --ell and --order")
        certs = [CongruenceCertificate(args.kind, p.m, p.k, p.r, beta, args.ell, args.order)]
    results = [verify_certificate(c, args.n_max, args.oracle_budget) for c in certs]
    code = EXIT_COUNTEREXAMPLE if any(r["ok"] is False for r in results) else EXIT_OK
    return ReportDocument("verify", {"n_max": args.n_max, "results": results}), code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpcong", description="Multipartition congruences modulo prime powers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "markdown"), default="markdown")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--no-cache", action="store_true", help="do not read or write the series cache")
    common.add_argument("--unverified", action="store_true", help="also print congruences lacking a passing check")
    sub = ap.add_subparsers(dest="command", required=True)

    def triple(p: argparse.ArgumentParser, required: bool = True) -> None:
        p.add_argument("--m", type=int, required=required)
        p.add_argument("--k", type=int, required=required)
        p.add_argument("--r", type=int, required=required)

    p = sub.add_parser("params", parents=[common], help="derived parameters of (m, k, r)")
    triple(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("phi", parents=[common], help="solve for phi")
    triple(p, required=False)
    p.add_argument("--N", type=int, help="truncation in q (default: smallest admissible)")
    p.add_argument("--sturm", action="store_true", help="raise N to the Sturm bound")
    p.add_argument("--table1", action="store_true", help="r = 2..7, m in {5,..,19}, k = 1")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("scan", parents=[common], help="search for p_r(m^k n + beta) = 0 (mod m^k)")
    p.add_argument("--r", default="1-9")
    p.add_argument("--m", default="5-23", help="non-primes and m < 5 are skipped")
    p.add_argument("--k", default="1-2")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("hecke", parents=[common], help="Hecke matrices, orders and certificates")
    triple(p)
    p.add_argument("--ell", required=True, help="prime or range, e.g. 13 or 5-59")
    p.add_argument("--primes-only", action="store_true", help="drop non-primes and 2, 3, m from --ell")
    p.add_argument("--basis", choices=("monomial", "miller"), default="monomial")
    p.add_argument("--cap", type=int, default=DEFAULT_ORDER_CAP)
    p.add_argument("--oracle-n", type=int, default=50)
    p.add_argument("--oracle-budget", type=int, default=500_000)
    p.add_argument("--no-certificates", action="store_true")
    p.set_defaults(func=cmd_hecke)

    p = sub.add_parser("verify", parents=[common], help="oracle-check a certificate")
    p.add_argument("--cert", help="certificate or report JSON file")
    triple(p, required=False)
    p.add_argument("--kind", choices=("ramanujan", "hecke-vanishing", "hecke-periodicity"), default="ramanujan")
    p.add_argument("--beta", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--order", type=int, help="K (vanishing) or M (periodicity)")
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--oracle-budget", type=int, default=2_000_000)
    p.set_defaults(func=cmd_verify)
    return ap


def _emit(doc: ReportDocument, args) -> None:
    text = doc.render(args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cache = None if args.no_cache else SeriesCache()
    try:
        with use_cache(cache):
            doc, code = args.func(args)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except IdentityFailure as exc:
        print(f"identity failure: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except OrderCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParameterError, InputError, CertificateError, InsufficientTruncation, SeriesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(doc, args)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
