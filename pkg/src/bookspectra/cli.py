"""Command line entry point: ``bookspectra <subcommand> ...``.

Exit codes: 0 success, 1 usage or parse error, 2 a check failed (census
violations, failed extremal verification, infeasible search).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import __version__
from . import graph as gc
from .booksize import booksize
from .search import Schedule, anneal_search, append_ledger, blowup_search
from .spectral import DEFAULT_TOL, solve_splus_rho, spectral_radius
from .trace import build_trace, verify_claims, verify_identities
from .verify import Census, census_record, csv_header, verify_extremal_families

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; we reserve 2 for failed checks
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["version"] = __version__
    return dict(sorted(cfg.items()))


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=False)


def _open_in(args):
    if getattr(args, "inp", None):
        return open(args.inp, encoding="ascii")
    return sys.stdin


def _open_out(args):
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8", newline="")
    return sys.stdout


def _read_graphs(args):
    """Yield parsed graphs; malformed lines are reported and remembered."""
    bad = []
    fh = _open_in(args)
    try:
        for lineno, g, err in gc.read_graph6_lines(fh):
            if err is not None:
                print(f"line {lineno}: {err}", file=sys.stderr)
                bad.append(lineno)
                continue
            yield g
    finally:
        if fh is not sys.stdin:
            fh.close()
    if bad:
        raise UsageError(f"{len(bad)} malformed graph6 line(s)")


def _header(out, args, fmt):
    cfg = _config(args)
    if fmt == "csv":
        out.write("# config: " + _dump(cfg) + "\n")
    else:
        out.write(_dump({"config": cfg}) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_construct(args) -> int:
    fam = args.family
    if fam == "complete-bipartite":
        g = gc.complete_bipartite(_need(args, "a"), _need(args, "b"))
    elif fam == "book":
        g = gc.book(_need(args, "r"))
    elif fam == "splus":
        g = gc.s_plus(_need(args, "m"), _need(args, "s"))
    elif fam == "prism":
        g = gc.prism_blowup(_need(args, "k"))
    elif fam == "blowup":
        if args.base is None or args.weights is None:
            raise UsageError("blowup needs --base and --weights")
        weights = tuple(int(w) for w in args.weights.split(","))
        g = gc.blow_up(gc.BlowupSpec(gc.parse_graph6(args.base), weights))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown family {fam}")
    # graph6 output stays a pure graph6 stream; the config goes to stderr
    print("# config: " + _dump(_config(args)), file=sys.stderr)
    print(gc.write_graph6(g))
    return EXIT_OK


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name} is required for family {args.family}")
    return value


def cmd_stats(args) -> int:
    out = _open_out(args)
    try:
        _header(out, args, args.format)
        if args.format == "csv":
            out.write(csv_header() + "\n")
        for g in _read_graphs(args):
            rec = census_record(g, args.r, args.tol)
            out.write(rec.csv_row() + "\n" if args.format == "csv" else _dump(rec.to_json()) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_rho(args) -> int:
    print(_dump({"config": _config(args)}))
    for g in _read_graphs(args):
        cert = spectral_radius(g, args.tol)
        print(_dump({
            "graph6": gc.write_graph6(g), "n": g.n, "m": g.m,
            "rho_lower": cert.rho_lower, "rho_upper": cert.rho_upper, "estimate": cert.estimate,
            "iterations": cert.iterations, "converged": cert.converged,
        }))
    return EXIT_OK


def cmd_bk(args) -> int:
    print(_dump({"config": _config(args)}))
    for g in _read_graphs(args):
        st = booksize(g)
        print(_dump({
            "graph6": gc.write_graph6(g), "n": g.n, "m": g.m, "bk": st.bk,
            "witness_edge": None if st.witness_edge is None else list(st.witness_edge),
            "witness_pages": list(st.witness_pages), "k2t": st.k2t,
        }))
    return EXIT_OK


def cmd_solve_rho(args) -> int:
    rho = solve_splus_rho(args.m, args.s)
    print(_dump({"config": _config(args), "rho": rho}))
    return EXIT_OK


def cmd_trace(args) -> int:
    if args.graph is not None:
        g = gc.parse_graph6(args.graph)
    else:
        graphs = list(_read_graphs(args))
        if len(graphs) != 1:
            raise UsageError("trace expects exactly one graph")
        g = graphs[0]
    cert = spectral_radius(g, args.tol)
    t = build_trace(g, cert, args.r, args.c)
    ident = verify_identities(t)
    claims = verify_claims(t)
    doc = {
        "config": _config(args),
        "trace": t.to_json(),
        "identities": asdict(ident),
        "claims": {k: asdict(v) for k, v in claims.items()},
    }
    if args.json:
        print(_dump(doc))
    else:
        print(f"graph {doc['trace']['graph6']}  n={g.n}  m={g.m}  rho={t.rho:.12g}  u*={t.u_star}")
        print(f"|U|={len(t.U)}  |W|={len(t.W)}  e(U)={t.e_U}  |W*|={len(t.W_star)}  "
              f"|U1|={len(t.U1)}  |U2|={len(t.U2)}  |V*|={len(t.V_star)}")
        print(f"identities: {'ok' if ident.passed else 'FAILED'}  "
              f"eq1={ident.residual_eq1:.3g}  eq2={ident.residual_eq2:.3g}  bound={ident.bound:.3g}")
        for key, res in claims.items():
            state = "n/a" if not res.applicable else ("holds" if res.holds else "FAILS")
            margin = "" if res.margin is None else f"  margin={res.margin:.6g}"
            print(f"claim {key}: {state}{margin}")
        if t.fragile:
            print("fragile: " + ", ".join(t.fragile))
    failed = not ident.passed or any(c.applicable and not c.holds for c in claims.values())
    return EXIT_FAILED if failed else EXIT_OK


def cmd_census(args) -> int:
    run = Census(args.r, args.tol, args.threads)
    if args.n_max is not None:
        if args.n_max > 8 or args.n_min < 1 or args.n_min > args.n_max:
            raise UsageError("need 1 <= --n-min <= --n-max <= 8")
        records = run.run_labeled(args.n_max, args.n_min, allow_large=args.n_max == 8)
    else:
        fh = _open_in(args)
        records = run.run_graph6(fh)
    out = None
    if args.out:
        out = open(args.out, "w", encoding="utf-8", newline="")
        _header(out, args, args.format)
        if args.format == "csv":
            out.write(csv_header() + "\n")
    try:
        for rec in records:
            if out is not None:
                out.write(rec.csv_row() + "\n" if args.format == "csv" else _dump(rec.to_json()) + "\n")
    finally:
        if out is not None:
            out.close()
    summary = run.summary
    print(_dump({"config": _config(args), "summary": summary.to_json()}))
    for item in summary.malformed:
        print(f"line {item['line']}: {item['error']}", file=sys.stderr)
    if summary.total_violations():
        return EXIT_FAILED
    if summary.malformed:
        return EXIT_USAGE
    return EXIT_OK


def _parse_splus_list(text: str) -> list[tuple[int, int]]:
    pairs = []
    if not text:
        return pairs
    for item in text.split(","):
        m, sep, s = item.partition(":")
        if not sep:
            raise UsageError(f"bad --splus item {item!r}; expected m:s")
        pairs.append((int(m), int(s)))
    return pairs


def cmd_extremal(args) -> int:
    rep = verify_extremal_families(args.k_max, _parse_splus_list(args.splus), args.tol)
    print(_dump({"config": _config(args), "passed": rep.passed, "rows": rep.rows}))
    return EXIT_OK if rep.passed else EXIT_FAILED


def _search_doc(args, res) -> dict:
    doc = res.to_json()
    if not args.trajectory:
        doc.pop("trajectory", None)
    return {"config": _config(args), "result": doc}


def cmd_anneal(args) -> int:
    sched = Schedule(args.t0, args.factor, args.steps, args.restarts)
    res = anneal_search(args.n, args.condition, args.seed, sched, args.direction, args.tol,
                        args.threads, keep_trajectory=args.trajectory)
    print(_dump(_search_doc(args, res)))
    if args.ledger:
        append_ledger(args.ledger, res, command="search anneal", config=_config(args))
    return EXIT_OK if res.feasible else EXIT_FAILED


def cmd_blowup(args) -> int:
    res = blowup_search(args.base_n_max, args.condition, args.direction, args.max_weight, args.tol)
    print(_dump(_search_doc(args, res)))
    if args.ledger:
        append_ledger(args.ledger, res, command="search blowup", config=_config(args))
    return EXIT_OK if res.feasible else EXIT_FAILED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bookspectra", description="Spectral booksize toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, stream=True):
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        if stream:
            sp.add_argument("--in", dest="inp", default=None, help="graph6 file (default: stdin)")

    c = sub.add_parser("construct", help="print a family member as graph6")
    c.add_argument("--family", required=True,
                   choices=["complete-bipartite", "book", "splus", "blowup", "prism"])
    for name in ("a", "b", "r", "m", "s", "k"):
        c.add_argument(f"--{name}", type=int)
    c.add_argument("--base", help="base graph (graph6) for --family blowup")
    c.add_argument("--weights", help="comma-separated class sizes for --family blowup")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("stats", help="per-graph census record")
    common(s)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--out", default=None)
    s.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    s.set_defaults(func=cmd_stats)

    r = sub.add_parser("rho", help="certified spectral radius enclosure")
    common(r)
    r.set_defaults(func=cmd_rho)

    b = sub.add_parser("bk", help="booksize with witness")
    b.add_argument("--in", dest="inp", default=None)
    b.set_defaults(func=cmd_bk)

    sr = sub.add_parser("solve-rho", help="spectral radius of S+_{m,s} from its scalar equation")
    sr.add_argument("--m", type=int, required=True)
    sr.add_argument("--s", type=int, required=True)
    sr.set_defaults(func=cmd_solve_rho)

    t = sub.add_parser("trace", help="proof-trace quantities for one graph")
    common(t)
    t.add_argument("--graph", default=None, help="graph6 string (default: read one from --in/stdin)")
    t.add_argument("--r", type=int, default=1)
    t.add_argument("--c", type=float, default=1.0)
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_trace)

    v = sub.add_parser("verify", help="census and extremal-family checks")
    vsub = v.add_subparsers(dest="verify_cmd", required=True, parser_class=_Parser)
    vc = vsub.add_parser("census")
    common(vc)
    vc.add_argument("--n-max", type=int, default=None, help="enumerate instead of reading graph6")
    vc.add_argument("--n-min", type=int, default=1)
    vc.add_argument("--r", type=int, default=1)
    vc.add_argument("--out", default=None)
    vc.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    vc.add_argument("--threads", type=int, default=default_threads())
    vc.set_defaults(func=cmd_census)
    ve = vsub.add_parser("extremal")
    common(ve, stream=False)
    ve.add_argument("--k-max", type=int, default=10)
    ve.add_argument("--splus", default="17:1,37:2,101:4,1001:8",
                    help="comma-separated m:s pairs")
    ve.set_defaults(func=cmd_extremal)

    se = sub.add_parser("search", help="extremal ratio search")
    ssub = se.add_subparsers(dest="search_cmd", required=True, parser_class=_Parser)
    sa = ssub.add_parser("anneal")
    common(sa, stream=False)
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--condition", choices=["weak", "strict-nosal"], default="weak")
    sa.add_argument("--direction", choices=["max", "min"], default="max")
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--steps", type=int, default=None, help="steps per restart (default 200 n^2)")
    sa.add_argument("--restarts", type=int, default=8)
    sa.add_argument("--t0", type=float, default=0.2)
    sa.add_argument("--factor", type=float, default=0.999)
    sa.add_argument("--threads", type=int, default=1)
    sa.add_argument("--trajectory", action="store_true")
    sa.add_argument("--ledger", default=None, help="append the result to this JSON-lines file")
    sa.set_defaults(func=cmd_anneal)
    sb = ssub.add_parser("blowup")
    common(sb, stream=False)
    sb.add_argument("--base-n-max", type=int, default=6)
    sb.add_argument("--condition", choices=["weak", "strict-nosal"], default="weak")
    sb.add_argument("--direction", choices=["max", "min"], default="max")
    sb.add_argument("--max-weight", type=int, default=64)
    sb.add_argument("--trajectory", action="store_true")
    sb.add_argument("--ledger", default=None)
    sb.set_defaults(func=cmd_blowup)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"bookspectra: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
