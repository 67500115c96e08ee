"""Command-line interface.

Exit codes: 0 success, 1 verification failures or an unreadable store,
2 invalid input, 3 search budget exhausted, 4 numerical failure,
5 certificates persisted with failed stages.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import RunConfig, load_config
from .curves import parse_curve
from .errors import DomainError, HeegnerKitError, NumericError, ResourceError
from .galois import DihedralGroup
from .pipeline import (
    append_certificates,
    certify_many,
    format_report,
    read_store,
    report_rows,
    siegel_median,
    verify_certificate,
)
from .prime_family import build_congruence, family_primes
from .quadforms import enumerate_class_group, heegner_forms

log = logging.getLogger("heegnerkit")


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--prec-bits", type=int)
    g.add_argument("--max-qexp-terms", type=int)
    g.add_argument("--prime-search-budget", type=int)
    g.add_argument("--class-number-floor", type=int)
    g.add_argument("--gram-tolerance", type=float)
    g.add_argument("--threads", type=int, help="worker processes (env HEEGNERKIT_THREADS)")
    g.add_argument("--output-dir")
    g.add_argument("--cache-dir")
    parent.add_argument("--json", action="store_true", help="machine-readable output")
    return parent


def _config(args) -> RunConfig:
    return load_config(
        args.config,
        prec_bits=args.prec_bits,
        max_qexp_terms=args.max_qexp_terms,
        prime_search_budget=args.prime_search_budget,
        class_number_floor=args.class_number_floor,
        gram_tolerance=args.gram_tolerance,
        threads=args.threads,
        output_dir=args.output_dir,
        cache_dir=args.cache_dir,
    )


def _emit(args, obj, text: str) -> None:
    print(json.dumps(obj, sort_keys=True) if args.json else text)


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    ap = argparse.ArgumentParser(prog="heegnerkit", description="Heegner points for the prime family A_N.")
    ap.add_argument("--version", action="version", version=f"heegnerkit {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("family", parents=[parent], help="list primes of A_N with hypothesis certificates")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--curve", help="label, inline 'a1,a2,a3,a4,a6,N' or JSON")
    src.add_argument("--conductor", type=int, help="use N directly (N = 1 allowed)")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--after", type=int, default=0)
    p.add_argument("--save", action="store_true", help="also write family_<N>.jsonl under the output directory")

    p = sub.add_parser("classgroup", parents=[parent], help="class group of Q(sqrt(-p))")
    p.add_argument("p", type=int)
    p.add_argument("--heegner", type=int, metavar="N", help="also list Heegner forms of level N")

    p = sub.add_parser("galois", parents=[parent], help="involutions and their fixed Heegner classes")
    p.add_argument("p", type=int)
    p.add_argument("--j", type=int, help="only involution j (default: all)")

    p = sub.add_parser("certify", parents=[parent], help="run the pipeline and append certificates to the store")
    p.add_argument("--curve", required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--p", type=int, nargs="+", help="explicit primes")
    which.add_argument("--count", type=int, help="first COUNT primes of A_N")
    p.add_argument("--after", type=int, default=0)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--force", action="store_true", help="allow primes outside A_N (recorded as a warning)")
    p.add_argument("--no-trace", action="store_true", help="stop after the modular image of the fixed point")
    p.add_argument("--store", help="certificate store (default <output-dir>/certificates.jsonl)")

    p = sub.add_parser("verify", parents=[parent], help="re-check exact fields of stored certificates")
    p.add_argument("--store")

    p = sub.add_parser("report", parents=[parent], help="tabulate stored certificates")
    p.add_argument("--store")
    p.add_argument("--drop", type=int, default=0, help="chain view: drop the DROP smallest primes per curve")
    return ap


def cmd_family(args, cfg: RunConfig) -> int:
    if args.count < 0:
        raise DomainError("count must be >= 0")
    N = args.conductor if args.conductor is not None else parse_curve(args.curve).conductor
    if N < 1:
        raise DomainError("conductor must be >= 1")
    cong = build_congruence(N)
    rows = [fp.to_json() for fp in family_primes(N, args.count, args.after, cfg.prime_search_budget)]
    if args.save and rows:
        path = cfg.store_path.parent / f"family_{N}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a") as fh:
            for r in rows:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    if args.json:
        for r in rows:
            print(json.dumps(r, sort_keys=True))
    else:
        if rows:
            print(f"A_{N}: p = {cong.residue} mod {cong.modulus}")
        for r in rows:
            ok = "valid" if r["hypothesis"]["valid"] else "INVALID"
            print(f"{r['p']:>12}  m_p={r['m_p']:<8} hypothesis {ok}")
    return 0


def cmd_classgroup(args, cfg: RunConfig) -> int:
    G = enumerate_class_group(args.p)
    obj = {
        "p": str(args.p),
        "h": G.h,
        "structure": list(G.structure),
        "forms": [f.to_json() for f in G.forms],
    }
    text = [f"disc -{args.p}: h = {G.h}, structure {list(G.structure) or '[trivial]'}"]
    text += [f"  [{i}] ({f.a}, {f.b}, {f.c})" for i, f in enumerate(G.forms)]
    if args.heegner:
        hfs = heegner_forms(args.p, args.heegner, group=G, budget=cfg.prime_search_budget)
        obj["heegner_forms"] = [hf.to_json() for hf in hfs]
        text.append(f"Heegner forms of level {args.heegner} (beta = {hfs[0].beta}):")
        text += [f"  [{hf.class_index}] ({hf.form.a}, {hf.form.b}, {hf.form.c})" for hf in hfs]
    _emit(args, obj, "\n".join(text))
    return 0


def cmd_galois(args, cfg: RunConfig) -> int:
    G = enumerate_class_group(args.p)
    D = DihedralGroup(G)
    labels = [D.involution(args.j)] if args.j is not None else D.involutions()
    rows = []
    for lab in labels:
        closed = D.fixed_heegner_classes(lab, "closed")
        scan = D.fixed_heegner_classes(lab, "scan")
        rows.append({"j": lab.j, "gamma": lab.element.gamma, "fixed": closed, "scan_agrees": closed == scan})
    obj = {"p": str(args.p), "h": G.h, "involutions": len(D.involutions()), "rows": rows}
    text = [f"Gal(H_p/Q) for p = {args.p}: order {D.order}, {G.h} involutions"]
    for r in rows:
        f = G.forms[r["fixed"][0]]
        text.append(f"  j={r['j']:<4} gamma=[{r['gamma']}] fixed class [{r['fixed'][0]}] ({f.a}, {f.b}, {f.c})  scan {'ok' if r['scan_agrees'] else 'MISMATCH'}")
    _emit(args, obj, "\n".join(text))
    return 0 if all(r["scan_agrees"] for r in rows) else 1


def cmd_certify(args, cfg: RunConfig) -> int:
    curve = parse_curve(args.curve)
    if args.p is not None:
        primes = args.p
    else:
        if args.count < 0:
            raise DomainError("count must be >= 0")
        primes = [fp.p for fp in family_primes(curve.conductor, args.count, args.after, cfg.prime_search_budget)]
    if not primes:
        return 0
    certs = certify_many(curve, primes, args.j, cfg, force=args.force, trace=not args.no_trace)
    store = args.store or cfg.store_path
    append_certificates(store, certs)
    for c in certs:
        for w in c["warnings"]:
            log.warning("p=%s: %s", c["p"], w)
        if args.json:
            print(json.dumps(c, sort_keys=True))
        else:
            failed = [s for s in c["stages"] if s["status"] == "failed"]
            pt = c.get("point")
            desc = "-" if not pt else ("O" if pt.get("identity") else f"({pt['x']}, {pt['y_rational_part']} + {pt['y_radical_part']}*sqrt(-p))")
            line = f"{curve.label} p={c['p']} j={c['j']} {c['status']} h={c.get('class_group', {}).get('h', '-')} point={desc}"
            if c.get("height"):
                line += f" hhat={c['height']['hhat_decimal']}"
            if failed:
                line += f" [{failed[0]['name']}: {failed[0]['error']}]"
            print(line)
    if not args.json:
        print(f"{len(certs)} certificate(s) appended to {store}")
    return 0 if all(c["status"] == "complete" for c in certs) else 5


def cmd_verify(args, cfg: RunConfig) -> int:
    contents = read_store(args.store or cfg.store_path)
    for w in contents.warnings:
        log.warning(w)
    bad = 0
    results = []
    for c in contents.certificates:
        problems = verify_certificate(c)
        bad += bool(problems)
        results.append({"curve": c["curve"].get("label"), "p": c["p"], "ok": not problems, "problems": problems})
        if not args.json:
            print(f"{'PASS' if not problems else 'FAIL'} {c['curve'].get('label')} p={c['p']} j={c['j']}" + "".join(f"\n    {m}" for m in problems))
    if args.json:
        print(json.dumps({"results": results, "corrupt_lines": len(contents.warnings)}, sort_keys=True))
    else:
        print(f"{len(results) - bad}/{len(results)} certificates verified")
    return 1 if bad or contents.all_corrupt else 0


def cmd_report(args, cfg: RunConfig) -> int:
    contents = read_store(args.store or cfg.store_path)
    for w in contents.warnings:
        log.warning(w)
    groups = report_rows(contents.certificates, drop=args.drop)
    if args.json:
        print(json.dumps({label: {"rows": rows, "siegel_median": siegel_median(rows)} for label, rows in groups.items()}, sort_keys=True))
    elif groups:
        print(format_report(groups))
    return 1 if contents.all_corrupt else 0


COMMANDS = {
    "family": cmd_family,
    "classgroup": cmd_classgroup,
    "galois": cmd_galois,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DomainError, HeegnerKitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
