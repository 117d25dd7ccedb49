"""Command line interface.

Exit codes: 0 pass, 1 usage or I/O error, 2 verification mismatch,
3 mismatch that only involves conjectural data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from ktr import abelian, charts, render
from ktr.abelian import discriminate, quotient_order
from ktr.arith import p_part, p_valuation
from ktr.tr import TRSummand, k_group, odd_summand, tr_order, verify_theorem_a

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_CONJECTURAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_records(command: str, inputs: dict, results, status: str = "proven") -> str:
    record = {"command": command, "inputs": inputs, "results": results, "status": status}
    return json.dumps(record, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def _emit_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _prime_power(n: int, p: int) -> str:
    return f"{p}^{p_valuation(n, p)}"


# -- k --------------------------------------------------------------------------

def cmd_k(args) -> tuple[str, int]:
    report = k_group(args.q)
    entry = abelian.lookup_k(args.q)
    status = entry.status if entry else "proven"
    summands = [s.as_dict() | {"label": s.label()} for s in report.summands]
    results = {
        "rank": report.rank,
        "torsion_order": report.torsion_order,
        "per_prime": {str(p): n for p, n in report.per_prime.items()},
        "summands": summands,
        "known_structure": entry.group_string if entry else None,
        "known_status": entry.status if entry else None,
        "notes": report.notes,
    }
    if args.format == "records":
        return _emit_records("k", {"q": args.q}, results, status), EXIT_OK
    if args.format == "csv":
        rows = [
            [args.q, s.p, s.d, s.r, s.lambda_index, s.order_raw or "", s.order_p_part or "", s.rank or ""]
            for s in report.summands
        ]
        header = ["q", "p", "d", "r", "lambda_index", "order_raw", "order_p_part", "rank"]
        return _emit_csv(header, rows), EXIT_OK

    i = report.i
    lines = []
    if report.q % 2 == 0:
        lines.append(f"K_{report.q}(A,I) ≅ Z  (free of rank 1)")
        for s in report.summands:
            lines.append(f"  p={s.p}: {s.label()} has rank 1")
    elif report.torsion_order == 1:
        lines.append(f"K_{report.q}(A,I) = 0")
    else:
        lines.append(
            f"K_{report.q}(A,I): finite of order {report.torsion_order} = ({i}!)^2"
        )
        for p, order in report.per_prime.items():
            lines.append(f"  {p}-part: order {_prime_power(order, p)}")
            for s in report.summands:
                if s.p == p:
                    lines.append(
                        f"    {s.label()}  order {_prime_power(s.order_p_part, p)}"
                        f"  (d={s.d}, r={s.r})"
                    )
    for note in report.notes:
        lines.append(f"  note: {note}")
    if entry:
        lines.append(f"  known structure: {entry.group_string} ({entry.status})")
    return "\n".join(lines) + "\n", EXIT_OK


# -- verify ---------------------------------------------------------------------

def cmd_verify(args) -> tuple[str, int]:
    report = verify_theorem_a(args.max_i, workers=args.workers)
    code = EXIT_OK if report.ok else EXIT_MISMATCH
    if args.format == "csv":
        return _emit_csv(["q", "order"], report.table()), code
    if args.format == "records":
        results = {
            "ok": report.ok,
            "table": [{"q": q, "order": order} for q, order in report.table()],
            "even_ranks": report.ranks,
            "first_discrepancy": report.first_discrepancy,
        }
        if args.timing:
            results["elapsed_seconds"] = report.elapsed
        return _emit_records("verify", {"max_i": args.max_i}, results), code
    lines = []
    for q, order in report.table():
        i = (q - 1) // 2
        lines.append(f"  K_{q - 1}: rank {report.ranks[i]}   K_{q}: order {order} = ({i}!)^2")
    verdict = "PASS" if report.ok else f"FAIL: {report.first_discrepancy}"
    lines.append(f"{verdict}  (0 <= i <= {args.max_i}, {report.elapsed:.3f}s)")
    return "\n".join(lines) + "\n", code


# -- tr -------------------------------------------------------------------------

def cmd_tr(args) -> tuple[str, int]:
    i, p, d = args.i, args.p, args.d
    if args.r is not None:
        raw = tr_order(i, p, d, args.r)
        summand = TRSummand(
            p=p, d=d, r=args.r, q=2 * i + 1, lambda_index=p ** (args.r - 1) * d,
            order_raw=raw, order_p_part=p_part(raw, p),
        )
    else:
        summand = odd_summand(i, p, d)
    inputs = {"i": i, "p": p, "d": d, "r": args.r}
    if args.format == "records":
        results = None if summand is None else summand.as_dict() | {"label": summand.label()}
        return _emit_records("tr", inputs, results), EXIT_OK
    if args.format == "csv":
        row = [] if summand is None else [[summand.q, p, d, summand.r, summand.lambda_index,
                                           summand.order_raw, summand.order_p_part]]
        return _emit_csv(["q", "p", "d", "r", "lambda_index", "order_raw", "order_p_part"], row), EXIT_OK
    if summand is None:
        return f"trivial: no level r for i={i}, d={d} (d > i)\n", EXIT_OK
    return (
        f"{summand.label()}: r={summand.r}, raw order {summand.order_raw}, "
        f"{p}-part {summand.order_p_part} = {_prime_power(summand.order_p_part, p)}\n"
    ), EXIT_OK


# -- discriminate ---------------------------------------------------------------

def cmd_discriminate(args) -> tuple[str, int]:
    if (args.v is None) != (args.observed is None):
        raise UsageError("--v and --observed must be given together")
    found = discriminate(args.order_exp, args.summands, args.p, args.v, args.observed)
    code = EXIT_OK if found else EXIT_MISMATCH
    inputs = {
        "order_exp": args.order_exp, "summands": args.summands, "p": args.p,
        "v": args.v, "observed": args.observed,
    }
    if args.format == "records":
        results = {
            "candidates": [str(g) for g in found],
            "exponents": [list(g.exponents) for g in found],
            "determined": len(found) == 1,
        }
        return _emit_records("discriminate", inputs, results), code
    if args.format == "csv":
        rows = [[str(g), " ".join(map(str, g.exponents))] for g in found]
        return _emit_csv(["group", "exponents"], rows), code
    if not found:
        return "no candidate is consistent with the constraints\n", code
    if len(found) == 1:
        return f"{found[0]}  (determined)\n", code
    lines = [f"{len(found)} candidates:"] + [f"  {g}" for g in found]
    return "\n".join(lines) + "\n", code


# -- chart ----------------------------------------------------------------------

def _expected_for(chart, n):
    """Expected order in degree n and where it came from, or (None, None)."""
    target = charts.tr_counterpart(chart, n)
    if target is None:
        return None, None
    r, lam, _ = target
    label = f"TR^{r}_{{{n}-λ_{lam}}}(Z;{chart.p})"
    if chart.integral:
        return charts.tr_expected_order(chart, n), f"{label} order formula"
    entry = abelian.lookup_tr(n, chart.p, lam)
    if entry is None:
        return None, None
    group = next(g for g in entry.groups if g.p == chart.p)
    return quotient_order(group, chart.coefficients), f"{label} ≅ {entry.group_string} mod {chart.p ** chart.coefficients}"


def cmd_chart(args) -> tuple[str, int]:
    chart = charts.load_chart(args.file)
    if args.truncate is not None:
        chart = charts.truncate(chart, args.truncate)
    final = charts.run_to_final(chart)

    if args.render == "svg":
        return render.render_svg(chart, final), EXIT_OK

    degrees = [args.degree] if args.degree is not None else sorted(
        {c.degree for c in chart.classes + chart.dead}
    )
    rows = []
    code = EXIT_OK
    for n in degrees:
        expected, source = (args.expect, "given") if args.expect is not None else _expected_for(final, n)
        group = charts.assemble(final, n)
        row = {
            "degree": n,
            "order": charts.degree_order(final, n),
            "group": str(group),
            "survivors": [c.name for c in final.in_degree(n)],
            "expected": expected,
            "expected_from": source,
            "match": None,
            "status": "conjectural" if charts.is_conjectural(final, n) else "proven",
        }
        if expected is not None:
            audit = charts.audit_against_tr(final, n, expected)
            row["match"] = audit.match
            if not audit.match:
                if not audit.conjectural:
                    code = EXIT_MISMATCH
                elif code == EXIT_OK:
                    code = EXIT_CONJECTURAL
        rows.append(row)

    inputs = {"file": str(args.file), "truncate": args.truncate, "degree": args.degree, "expect": args.expect}
    if args.format == "records":
        status = "conjectural" if any(r["status"] == "conjectural" for r in rows) else "proven"
        return _emit_records("chart", inputs, {"chart": chart.name, "degrees": rows}, status), code
    if args.format == "csv":
        header = ["degree", "order", "group", "expected", "match", "status"]
        body = [[r[h] if r[h] is not None else "" for h in header] for r in rows]
        return _emit_csv(header, body), code

    out = [render.render_grid(chart, final)]
    for r in rows:
        line = f"degree {r['degree']}: order {r['order']}, group {r['group']} [{r['status']}]"
        if r["expected"] is not None:
            verdict = "match" if r["match"] else "MISMATCH"
            line += f"; expected {r['expected']} ({r['expected_from']}): {verdict}"
        out.append(line)
    return "\n".join(out) + "\n", code


# -- known ----------------------------------------------------------------------

def cmd_known(args) -> tuple[str, int]:
    entries = abelian.known_structures()
    if args.format == "records":
        results = [
            {"label": e.label, "kind": e.kind, "q": e.q, "group": e.group_string,
             "order": e.order, "status": e.status, "source": e.source}
            for e in entries
        ]
        return _emit_records("known", {}, results), EXIT_OK
    if args.format == "csv":
        rows = [[e.label, e.q, e.group_string, e.order, e.status, e.source] for e in entries]
        return _emit_csv(["label", "q", "group", "order", "status", "source"], rows), EXIT_OK
    width = max(len(e.label) for e in entries)
    lines = [f"{e.label.ljust(width)}  ≅ {e.group_string}  [{e.status}]" for e in entries]
    return "\n".join(lines) + "\n", EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ktr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = dict(choices=["text", "records", "csv"], default="text")

    p = sub.add_parser("k", help="rank, order and TR decomposition of K_q(A,I)")
    p.add_argument("q", type=int)
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_k)

    p = sub.add_parser("verify", help="check rank 1 / order (i!)^2 for 0 <= i <= N")
    p.add_argument("--max-i", type=int, default=40)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include timing in records output")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tr", help="order of TR^r_{2i+1-λ_{p^(r-1)d}}(Z;p)")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, help="evaluate at this level instead of the limit level")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_tr)

    p = sub.add_parser("discriminate", help="abelian p-groups of given order and summand count")
    p.add_argument("--order-exp", type=int, required=True)
    p.add_argument("--summands", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--v", type=int)
    p.add_argument("--observed", type=int, help="observed order of the mod p^v group")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("chart", help="load, run, audit and render a spectral sequence chart")
    p.add_argument("file", help="chart file, or the name of a bundled chart")
    p.add_argument("--truncate", type=int, metavar="B", help="keep filtration <= B")
    p.add_argument("--degree", type=int)
    p.add_argument("--expect", type=int, help="expected order (defaults to the TR order)")
    p.add_argument("--render", choices=["grid", "svg"], default="grid")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("known", help="list the registry of known group structures")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_known)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ktr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"ktr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"ktr: verification failed: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
