"""Command-line interface for the commensurability growth engine.

Subcommands: groups, count, zeta, lattices, verify.  Exit codes:
0 success, 1 verification/computation failure, 2 usage or configuration
error, 3 a resource cap was exceeded (result unavailable, not wrong).

Results of expensive computations are cached in an append-only JSONL
file; every record carries a digest so corrupted lines are detected and
skipped rather than trusted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from filelock import FileLock

from . import zeta as Z
from .floors import CapExceeded
from .goodbasis import LatticeError
from .latticeenum import (
    CoefficientTable,
    count_coefficients,
    down_only_count,
    lattice_ball,
    oracle_count,
)
from .malcev import list_groups, load_group, spec_selfcheck
from .padic import is_prime, primes_upto

log = logging.getLogger("commzeta")

CACHE_SCHEMA = 1

OUTPUT_SCHEMA = {
    "cache_record": {
        "schema": "int (cache format version)",
        "kind": "count",
        "params": "dict of the defining parameters",
        "result": "CoefficientTable.to_json()",
        "digest": "sha256 of canonical params+result JSON",
    },
    "coefficient_table": {
        "group": "catalog id",
        "prime": "p",
        "kmax": "K",
        "counts": "[c_{p^0}, ..., c_{p^K}]",
        "method": "search | oracle",
        "meta": "run statistics",
    },
    "lattice_record": {
        "key": "canonical basis key",
        "rows": "lower-triangular basis coordinates (exact rationals)",
        "a": "log_p [Gamma : Delta cap Gamma]",
        "b": "log_p [Delta : Delta cap Gamma]",
        "depth": "search depth at first discovery",
    },
}


# ---------------------------------------------------------------------------
# configuration


def load_config(args) -> dict:
    """Config file < flags.  The file comes from --config or COMMZETA_CONFIG."""
    cfg = {}
    path = getattr(args, "config", None) or os.environ.get("COMMZETA_CONFIG")
    if path:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise SystemExit2(f"cannot read config {path}: {e}")
        if not isinstance(cfg, dict):
            raise SystemExit2(f"config {path} must be a JSON object")
    out = {
        "cache": cfg.get("cache", str(Path.home() / ".cache/commzeta/results.jsonl")),
        "jobs": int(cfg.get("jobs", 1)),
        "max_quotient": int(cfg.get("max_quotient", 65536)),
        "max_nodes": int(cfg.get("max_nodes", 200_000)),
    }
    for key in out:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


class SystemExit2(Exception):
    """Usage/configuration error (exit code 2)."""


# ---------------------------------------------------------------------------
# result cache


def _digest(params: dict, result: dict) -> str:
    blob = json.dumps([params, result], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def cache_get(path: str, kind: str, params: dict) -> dict | None:
    f = Path(path)
    if not f.exists():
        return None
    bad = 0
    hit = None
    for line in f.read_text().splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if rec.get("schema") != CACHE_SCHEMA:
                continue
            if rec.get("digest") != _digest(rec["params"], rec["result"]):
                bad += 1
                continue
        except (json.JSONDecodeError, KeyError, TypeError):
            bad += 1
            continue
        if rec.get("kind") == kind and rec["params"] == params:
            hit = rec["result"]  # last valid record wins
    if bad:
        log.warning("cache %s: skipped %d corrupted line(s)", path, bad)
    return hit


def cache_put(path: str, kind: str, params: dict, result: dict) -> None:
    f = Path(path)
    f.parent.mkdir(parents=True, exist_ok=True)
    rec = {
        "schema": CACHE_SCHEMA,
        "kind": kind,
        "params": params,
        "result": result,
        "digest": _digest(params, result),
    }
    with FileLock(str(f) + ".lock"):
        with f.open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_groups(args, cfg) -> int:
    rows = []
    for gid in list_groups():
        G = load_group(gid)
        rows.append({"id": gid, "d": G.d, "c": G.c, "abelian": G.is_abelian})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            kind = "abelian" if r["abelian"] else f"class {r['c']}"
            print(f"{r['id']:10s} d={r['d']}  {kind}")
    return 0


def _counts(gid, p, K, method, cfg, use_cache: bool) -> CoefficientTable:
    G = load_group(gid)
    params = {"group": gid, "prime": p, "kmax": K, "method": method}
    if use_cache:
        hit = cache_get(cfg["cache"], "count", params)
        if hit is not None:
            log.info("cache hit for %s", params)
            return CoefficientTable.from_json(hit)
    t0 = time.monotonic()
    if method == "search":
        tab = count_coefficients(G, p, K, jobs=cfg["jobs"],
                                 max_nodes=cfg["max_nodes"],
                                 max_quotient=cfg["max_quotient"])
    else:
        tab = oracle_count(G, p, K, max_quotient=cfg["max_quotient"])
    tab.meta["seconds"] = round(time.monotonic() - t0, 3)
    log.info("phase=count method=%s group=%s p=%d K=%d seconds=%.3f meta=%s",
             method, gid, p, K, tab.meta["seconds"], tab.meta)
    if use_cache:
        cache_put(cfg["cache"], "count", params, tab.to_json())
    return tab


def cmd_count(args, cfg) -> int:
    if not is_prime(args.prime):
        raise SystemExit2(f"--prime must be prime, got {args.prime}")
    methods = ["search", "oracle"] if args.method == "both" else [args.method]
    tables = [_counts(args.group, args.prime, args.kmax, m, cfg, not args.no_cache)
              for m in methods]
    if len(tables) == 2 and tables[0].counts != tables[1].counts:
        print("MISMATCH between search and oracle:", file=sys.stderr)
        for t in tables:
            print(f"  {t.method}: {t.counts}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps([t.to_json() for t in tables], indent=2))
    elif args.csv:
        rows = [
            {"group": t.gid, "prime": t.prime, "k": k, "c": c, "method": t.method}
            for t in tables for k, c in enumerate(t.counts)
        ]
        sys.stdout.write(Z.coefficients_csv(rows))
    else:
        for t in tables:
            print(f"{t.gid} p={t.prime} [{t.method}]: "
                  + " ".join(f"c_{t.prime}^{k}={c}" for k, c in enumerate(t.counts)))
    return 0


def cmd_zeta(args, cfg) -> int:
    if args.global_n:
        return _zeta_global(args, cfg)
    if args.prime is None or args.kmax is None:
        raise SystemExit2("zeta needs --prime and --kmax (or --global-n)")
    if not is_prime(args.prime):
        raise SystemExit2(f"--prime must be prime, got {args.prime}")
    tab = _counts(args.group, args.prime, args.kmax, "search", cfg, not args.no_cache)
    series = Z.LocalSeries(tab.gid, tab.prime, tuple(tab.counts))
    fit = Z.fit_recurrence(series.coeffs)
    doc = {"series": series.to_json(), "recurrence": None, "rational": None}
    if fit is not None:
        N, D = Z.to_rational_function(series.coeffs, fit)
        doc["recurrence"] = fit.to_json()
        doc["rational"] = {"numerator": [str(x) for x in N],
                           "denominator": [str(x) for x in D]}
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(f"local series {series.gid} p={series.prime}: {list(series.coeffs)}")
        if fit is None:
            print("no exact linear recurrence within the available window")
        else:
            print(f"recurrence order {fit.order}, start {fit.start}, "
                  f"q = {[str(x) for x in fit.q]}, window {fit.window}")
            N, D = Z.to_rational_function(series.coeffs, fit)
            print(f"rational form: ({Z.poly_str(N)}) / ({Z.poly_str(D)})")
    return 0


def _zeta_global(args, cfg) -> int:
    n_max = args.global_n
    locs = {}
    for p in primes_upto(n_max):
        kmax = 0
        n = p
        while n <= n_max:
            kmax += 1
            n *= p
        tab = _counts(args.group, p, kmax, "search", cfg, not args.no_cache)
        locs[p] = Z.LocalSeries(tab.gid, p, tuple(tab.counts))
    cs = Z.global_coefficients(locs, n_max)
    if args.json:
        print(json.dumps({"group": args.group, "n_max": n_max, "coeffs": cs}))
    else:
        print(f"global coefficients of {args.group} up to n={n_max}:")
        print(" ".join(str(c) for c in cs))
    return 0


def cmd_lattices(args, cfg) -> int:
    if not is_prime(args.prime):
        raise SystemExit2(f"--prime must be prime, got {args.prime}")
    G = load_group(args.group)
    ball = lattice_ball(G, args.prime, args.kmax, jobs=cfg["jobs"],
                        max_nodes=cfg["max_nodes"],
                        max_quotient=cfg["max_quotient"])
    if args.json:
        print(json.dumps([r.to_json() for r in ball], indent=2))
    else:
        for r in ball:
            print(f"v={r.valuation} (a={r.a}, b={r.b})  {r.key}")
        print(f"total: {len(ball)} lattices at valuation <= {args.kmax}")
    return 0


# ---------------------------------------------------------------------------
# verification suites


def _suite_selfcheck(cfg):
    for gid in list_groups():
        rep = spec_selfcheck(load_group(gid), 40, seed=7)
        if not rep.ok:
            return False, f"{gid}: {rep.failures}"
    return True, f"{len(list_groups())} groups, 40 samples each"


def _suite_goodbasis(cfg):
    import random
    from fractions import Fraction
    from .goodbasis import (basis_from_coords, canonical_form, intersect,
                            intersect_normative, same_lattice, standard_lattice)
    Z2 = load_group("Z2")
    rng = random.Random(3)
    for _ in range(15):
        rows = [[Fraction(rng.choice([1, 2, 4, 8]), rng.choice([1, 2, 4])), 0],
                [Fraction(rng.randrange(8)), Fraction(rng.choice([1, 2, 4, 8]),
                                                      rng.choice([1, 2, 4]))]]
        B = canonical_form(basis_from_coords(Z2, rows, 2))
        if canonical_form(B).rows != B.rows:
            return False, "canonical form is not idempotent"
        I1 = intersect(B, standard_lattice(Z2, 2))
        I2 = intersect_normative(B, standard_lattice(Z2, 2))
        if not same_lattice(I1, I2):
            return False, f"intersection routes disagree on {rows}"
    return True, "15 random rational bases: canonical + dual-route intersection"


def _suite_oracle(cfg):
    details = []
    for gid, ps, K in [("Z2", (2, 3), 2), ("heis3", (2,), 1)]:
        G = load_group(gid)
        for p in ps:
            for k in range(1, K + 1):
                s = count_coefficients(G, p, k, max_quotient=cfg["max_quotient"])
                o = oracle_count(G, p, k, max_quotient=cfg["max_quotient"])
                if s.counts != o.counts:
                    return False, f"{gid} p={p} K={k}: {s.counts} != {o.counts}"
                details.append(f"{gid},p={p},K={k}")
    return True, "search == oracle on " + "; ".join(details)


def _suite_abelian(cfg):
    Z1 = load_group("Z1")
    for p in (2, 3, 5):
        tab = count_coefficients(Z1, p, 4)
        if tab.counts != [1, 2, 2, 2, 2]:
            return False, f"p={p}: {tab.counts}"
        fit = Z.fit_recurrence(tab.counts)
        N, D = Z.to_rational_function(tab.counts, fit)
        if (N, D) != ([1, 1], [1, -1]):
            return False, f"p={p}: rational form {N}/{D}"
    return True, "local (1,2,2,2,2) and (1+t)/(1-t) at p=2,3,5"


def _suite_euler(cfg):
    locs = {p: Z.abelian_local(p, 8) for p in primes_upto(200)}
    cs = Z.global_coefficients(locs, 200)
    for n in range(1, 201):
        if cs[n - 1] != Z.abelian_reference(n):
            return False, f"c_{n} = {cs[n - 1]} != 2^omega"
    for m in range(2, 15):
        for n in range(2, 15):
            from math import gcd
            if gcd(m, n) == 1 and cs[m * n - 1] != cs[m - 1] * cs[n - 1]:
                return False, f"multiplicativity fails at {m},{n}"
    return True, "global == 2^omega(n) for n <= 200; multiplicative"


def _suite_determinism(cfg):
    for gid, p, K in [("Z2", 3, 2), ("heis3", 2, 2)]:
        G = load_group(gid)
        b1 = lattice_ball(G, p, K, jobs=1)
        b8 = lattice_ball(G, p, K, jobs=8)
        if [r.to_json() for r in b1] != [r.to_json() for r in b8]:
            return False, f"{gid} p={p} K={K}: 1 vs 8 workers differ"
    return True, "identical balls with 1 and 8 workers (Z2, heis3)"


def _suite_down_only(cfg):
    from .hnf import hnf_sublattice_count
    Z2 = load_group("Z2")
    got = down_only_count(Z2, 2, 4)
    want = [hnf_sublattice_count(2, 2**k) for k in range(5)]
    if got != want:
        return False, f"Z2: {got} != HNF oracle {want}"
    H3 = load_group("heis3")
    for p in (2, 3, 5):
        got = down_only_count(H3, p, 1)
        if got != [1, p + 1]:
            return False, f"heis3 p={p}: {got}"
    return True, "Z2 sigma(2^k) vs HNF oracle; heis3 a_p = p+1"


SUITES = {
    "selfcheck": _suite_selfcheck,
    "goodbasis": _suite_goodbasis,
    "oracle-equivalence": _suite_oracle,
    "abelian-closed-form": _suite_abelian,
    "euler": _suite_euler,
    "determinism": _suite_determinism,
    "down-only": _suite_down_only,
}


def cmd_verify(args, cfg) -> int:
    names = args.suite or list(SUITES)
    for n in names:
        if n not in SUITES:
            raise SystemExit2(f"unknown suite {n!r}; have {sorted(SUITES)}")
    failed = 0
    results = []
    for name in names:
        t0 = time.monotonic()
        try:
            ok, detail = SUITES[name](cfg)
        except CapExceeded as e:
            ok, detail = False, f"cap exceeded: {e}"
        dt = time.monotonic() - t0
        results.append({"suite": name, "ok": ok, "detail": detail,
                        "seconds": round(dt, 2)})
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name} ({dt:.1f}s): {detail}")
        if not ok:
            failed += 1
    if args.json:
        print(json.dumps(results, indent=2))
    return 1 if failed else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="commzeta",
        description="Exact commensurability growth of lattices in unipotent groups.",
    )
    ap.add_argument("--schema", action="store_true",
                    help="print the JSON schemas of all outputs and exit")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--config", help="JSON config file (or set COMMZETA_CONFIG)")
    sub = ap.add_subparsers(dest="cmd")

    def common(sp, prime=True):
        sp.add_argument("--group", required=True, help="catalog group id")
        if prime:
            sp.add_argument("--prime", type=int, required=True)
            sp.add_argument("--kmax", type=int, required=True)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--max-quotient", type=int, default=None,
                        dest="max_quotient")
        sp.add_argument("--max-nodes", type=int, default=None, dest="max_nodes")
        sp.add_argument("--cache", default=None)
        sp.add_argument("--no-cache", action="store_true")
        sp.add_argument("--json", action="store_true")

    g = sub.add_parser("groups", help="list catalog groups")
    g.add_argument("--json", action="store_true")

    c = sub.add_parser("count", help="growth coefficients c_{p^k}")
    common(c)
    c.add_argument("--method", choices=["search", "oracle", "both"],
                   default="search")
    c.add_argument("--csv", action="store_true")

    z = sub.add_parser("zeta", help="local series, recurrence, rational form")
    common(z, prime=False)
    z.add_argument("--prime", type=int)
    z.add_argument("--kmax", type=int)
    z.add_argument("--global-n", type=int, default=None, dest="global_n",
                   help="assemble global coefficients up to this n instead")

    l = sub.add_parser("lattices", help="dump the commensurability ball")
    common(l)

    vfy = sub.add_parser("verify", help="run verification suites")
    vfy.add_argument("--suite", action="append",
                     help=f"one of {sorted(SUITES)} (repeatable; default all)")
    vfy.add_argument("--json", action="store_true")
    for name in ("jobs", "max_quotient", "max_nodes", "cache"):
        vfy.add_argument(f"--{name.replace('_', '-')}", default=None,
                         type=int if name != "cache" else str, dest=name)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.schema:
        print(json.dumps(OUTPUT_SCHEMA, indent=2))
        return 0
    if not args.cmd:
        ap.print_help()
        return 2
    try:
        cfg = load_config(args)
        handler = {
            "groups": cmd_groups,
            "count": cmd_count,
            "zeta": cmd_zeta,
            "lattices": cmd_lattices,
            "verify": cmd_verify,
        }[args.cmd]
        return handler(args, cfg)
    except SystemExit2 as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CapExceeded as e:
        print(f"unavailable: {e}", file=sys.stderr)
        return 3
    except (LatticeError, ValueError) as e:
        print(f"failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
