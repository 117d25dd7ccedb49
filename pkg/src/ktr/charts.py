"""Bookkeeping for Tate spectral sequence charts.

A chart lists classes (each a cyclic p-group Z/p^e placed at a filtration
and total degree), the differentials between them and the hidden
extensions among survivors.  Charts are data: nothing here derives a
differential, it only propagates them and audits the resulting orders.

Filtration is homological (t^k sits in filtration -2k), so d_r lowers
filtration by r and total degree by 1.  Restricting to filtration <= B
gives the homotopy fixed point spectral sequence; a differential whose
source lies above B no longer hits its target there.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from ktr.abelian import AbelianPGroup, data_dir
from ktr.arith import check_prime, p_valuation
from ktr.tr import tr_order

STATUSES = ("proven", "conjectural")


class ChartError(ValueError):
    """Invalid chart data; ``problems`` lists every violation found."""

    def __init__(self, problems, where=None):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        self.where = where
        prefix = f"{where}: " if where else ""
        super().__init__(prefix + "; ".join(self.problems))


@dataclass(frozen=True)
class ChartClass:
    name: str
    filtration: int
    degree: int
    order_exp: int


@dataclass(frozen=True)
class ChartDifferential:
    """d_page(p^source_mult_exp * source) = target, with image of order p^image_exp."""

    page: int
    source: str
    target: str
    image_exp: int = 1
    source_mult_exp: int = 0
    status: str = "proven"
    note: str = ""

    def label(self) -> str:
        mult = "" if self.source_mult_exp == 0 else f"p^{self.source_mult_exp}·"
        return f"d_{self.page}({mult}{self.source}) = {self.target}"


@dataclass(frozen=True)
class HiddenExtension:
    """p times ``lower`` is detected by ``upper``."""

    lower: str
    upper: str
    status: str = "proven"
    note: str = ""


@dataclass(frozen=True)
class Chart:
    name: str
    p: int
    subgroup_exp: int
    lambda_shift: int
    classes: tuple[ChartClass, ...] = ()
    differentials: tuple[ChartDifferential, ...] = ()
    extensions: tuple[HiddenExtension, ...] = ()
    coefficients: Optional[int] = None
    truncation: Optional[int] = None
    status: str = "proven"
    partial: bool = False
    notes: tuple[str, ...] = ()
    maps: tuple[str, ...] = ()
    # state produced by run_to_final / truncate
    final: bool = False
    max_filtration: Optional[int] = None
    entering: tuple[ChartDifferential, ...] = ()
    dead: tuple[ChartClass, ...] = ()

    @property
    def integral(self) -> bool:
        return self.coefficients is None

    @property
    def default_bound(self) -> int:
        return self.truncation if self.truncation is not None else 2 * self.lambda_shift

    @property
    def max_order_exp(self) -> int:
        if self.integral:
            return self.subgroup_exp
        return min(self.subgroup_exp, self.coefficients)

    def by_name(self) -> dict[str, ChartClass]:
        return {c.name: c for c in self.classes}

    def in_degree(self, n: int) -> list[ChartClass]:
        return [c for c in self.classes if c.degree == n]

    def coefficient_label(self) -> str:
        return "integral" if self.integral else f"mod {self.p ** self.coefficients}"


# -- validation ---------------------------------------------------------------

def validate(chart: Chart) -> list[str]:
    """Return every invariant violation in ``chart`` (empty when valid)."""
    problems = []
    try:
        check_prime(chart.p)
    except ValueError as exc:
        return [str(exc)]
    if chart.subgroup_exp < 1:
        problems.append(f"subgroup exponent must be >= 1, got {chart.subgroup_exp}")
    if chart.coefficients is not None and chart.coefficients < 1:
        problems.append(f"mod p^v coefficients need v >= 1, got {chart.coefficients}")
    if chart.status not in STATUSES:
        problems.append(f"chart status {chart.status!r} is not one of {STATUSES}")

    names = {}
    for k, c in enumerate(chart.classes):
        where = f"class[{k}] {c.name!r}"
        if c.name in names:
            problems.append(f"{where}: duplicate name")
        names[c.name] = c
        if c.order_exp < 1:
            problems.append(f"{where}: order exponent must be >= 1")
        elif chart.subgroup_exp >= 1 and c.order_exp > chart.max_order_exp:
            problems.append(
                f"{where}: order {chart.p}^{c.order_exp} does not divide "
                f"{chart.p}^{chart.max_order_exp}"
            )

    # final charts keep the dead classes that their differentials refer to
    lookup = {c.name: c for c in chart.dead} | names
    for k, d in enumerate(chart.differentials):
        where = f"differential[{k}] {d.label()}"
        src, tgt = lookup.get(d.source), lookup.get(d.target)
        if src is None:
            problems.append(f"{where}: unknown source class {d.source!r}")
        if tgt is None:
            problems.append(f"{where}: unknown target class {d.target!r}")
        if d.status not in STATUSES:
            problems.append(f"{where}: bad status {d.status!r}")
        if d.page < 2:
            problems.append(f"{where}: page must be >= 2")
        if d.image_exp < 1 or d.source_mult_exp < 0:
            problems.append(f"{where}: image exponent must be >= 1 and multiplier >= 0")
        if src is None or tgt is None:
            continue
        if tgt.filtration != src.filtration - d.page:
            problems.append(
                f"{where}: target filtration {tgt.filtration} != "
                f"{src.filtration} - {d.page}"
            )
        if tgt.degree != src.degree - 1:
            problems.append(f"{where}: target degree {tgt.degree} != {src.degree} - 1")
        if chart.integral and (src.degree % 2 != 0 or tgt.degree % 2 != 1):
            problems.append(f"{where}: integral differentials go from even to odd degree")
        if chart.final:
            continue
        if d.image_exp > src.order_exp - d.source_mult_exp:
            problems.append(f"{where}: image order exceeds the source subgroup order")
        if d.image_exp > tgt.order_exp:
            problems.append(f"{where}: image order exceeds the target order")

    problems.extend(_extension_problems(chart.extensions, lookup))
    return problems


def _extension_problems(extensions, names) -> list[str]:
    problems = []
    uppers, lowers = {}, {}
    for k, e in enumerate(extensions):
        where = f"extension[{k}] {e.lower} -> {e.upper}"
        lo, up = names.get(e.lower), names.get(e.upper)
        if lo is None or up is None:
            problems.append(f"{where}: unknown class")
            continue
        if e.status not in STATUSES:
            problems.append(f"{where}: bad status {e.status!r}")
        if lo.degree != up.degree:
            problems.append(f"{where}: links degrees {lo.degree} and {up.degree}")
        if e.lower in uppers:
            problems.append(f"{where}: {e.lower} already extends to {uppers[e.lower]}")
        if e.upper in lowers:
            problems.append(f"{where}: {e.upper} is already the image of {lowers[e.upper]}")
        uppers[e.lower] = e.upper
        lowers[e.upper] = e.lower
    for start in uppers:
        seen = {start}
        node = uppers.get(start)
        while node is not None:
            if node in seen:
                problems.append(f"extension chain through {start!r} forms a cycle")
                break
            seen.add(node)
            node = uppers.get(node)
    return problems


def check(chart: Chart, where=None) -> Chart:
    problems = validate(chart)
    if problems:
        raise ChartError(problems, where)
    return chart


# -- file format --------------------------------------------------------------

def chart_from_dict(doc: dict, where=None) -> Chart:
    try:
        p = int(doc["prime"])
        coeff = doc.get("coefficients", "integral")
        if coeff == "integral":
            v = None
        else:
            modulus = int(str(coeff).removeprefix("mod").strip())
            v = p_valuation(modulus, p)
            if p**v != modulus:
                raise ChartError(f"coefficients {coeff!r} are not mod a power of {p}", where)
        classes = tuple(
            ChartClass(
                name=str(c["name"]),
                filtration=int(c["filtration"]),
                degree=int(c["degree"]),
                order_exp=int(c["order_exp"]),
            )
            for c in doc.get("classes", [])
        )
        diffs = tuple(_diff_from_dict(d) for d in doc.get("differentials", []))
        exts = tuple(
            HiddenExtension(
                lower=str(e["lower"]),
                upper=str(e["upper"]),
                status=e.get("status", "proven"),
                note=e.get("note", ""),
            )
            for e in doc.get("extensions", [])
        )
        chart = Chart(
            name=str(doc.get("name", "")),
            p=p,
            subgroup_exp=int(doc["subgroup_exp"]),
            lambda_shift=int(doc.get("lambda_shift", 0)),
            classes=classes,
            differentials=diffs,
            extensions=exts,
            coefficients=v,
            truncation=doc.get("truncation"),
            status=doc.get("status", "proven"),
            partial=bool(doc.get("partial", False)),
            notes=tuple(doc.get("notes", ())),
            maps=tuple(doc.get("maps", ())),
            final=doc.get("page", "E2") == "final",
            max_filtration=doc.get("max_filtration"),
            entering=tuple(_diff_from_dict(d) for d in doc.get("entering", [])),
            dead=tuple(
                ChartClass(c["name"], int(c["filtration"]), int(c["degree"]), int(c["order_exp"]))
                for c in doc.get("dead", [])
            ),
        )
    except ChartError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"malformed chart document: {exc!r}", where) from exc
    return check(chart, where)


def _diff_from_dict(d: dict) -> ChartDifferential:
    return ChartDifferential(
        page=int(d["page"]),
        source=str(d["source"]),
        target=str(d["target"]),
        image_exp=int(d.get("image", 1)),
        source_mult_exp=int(d.get("mult", 0)),
        status=d.get("status", "proven"),
        note=d.get("note", ""),
    )


def _diff_to_dict(d: ChartDifferential) -> dict:
    out = {
        "page": d.page,
        "source": d.source,
        "mult": d.source_mult_exp,
        "target": d.target,
        "image": d.image_exp,
        "status": d.status,
    }
    if d.note:
        out["note"] = d.note
    return out


def _class_to_dict(c: ChartClass) -> dict:
    return {"name": c.name, "filtration": c.filtration, "degree": c.degree, "order_exp": c.order_exp}


def chart_to_dict(chart: Chart) -> dict:
    doc = {
        "name": chart.name,
        "prime": chart.p,
        "subgroup_exp": chart.subgroup_exp,
        "coefficients": "integral" if chart.integral else f"mod {chart.p ** chart.coefficients}",
        "lambda_shift": chart.lambda_shift,
        "status": chart.status,
        "partial": chart.partial,
    }
    if chart.truncation is not None:
        doc["truncation"] = chart.truncation
    if chart.notes:
        doc["notes"] = list(chart.notes)
    if chart.maps:
        doc["maps"] = list(chart.maps)
    doc["classes"] = [_class_to_dict(c) for c in chart.classes]
    doc["differentials"] = [_diff_to_dict(d) for d in chart.differentials]
    doc["extensions"] = []
    for e in chart.extensions:
        item = {"lower": e.lower, "upper": e.upper, "status": e.status}
        if e.note:
            item["note"] = e.note
        doc["extensions"].append(item)
    if chart.final:
        doc["page"] = "final"
    if chart.max_filtration is not None:
        doc["max_filtration"] = chart.max_filtration
    if chart.entering:
        doc["entering"] = [_diff_to_dict(d) for d in chart.entering]
    if chart.dead:
        doc["dead"] = [_class_to_dict(c) for c in chart.dead]
    return doc


def dumps(chart: Chart) -> str:
    return json.dumps(chart_to_dict(chart), indent=2, ensure_ascii=False) + "\n"


def loads(text: str, where=None) -> Chart:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChartError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}", where) from exc
    if not isinstance(doc, dict):
        raise ChartError("chart document must be a JSON object", where)
    return chart_from_dict(doc, where)


def save_chart(chart: Chart, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(chart), encoding="utf-8")


def bundled_charts() -> list[str]:
    return sorted(p.stem for p in (data_dir() / "charts").glob("*.json"))


def load_chart(document: Union[str, Path, dict]) -> Chart:
    """Load a chart from a dict, a file path, or the name of a bundled chart."""
    if isinstance(document, dict):
        return chart_from_dict(document)
    path = Path(document)
    if not path.exists():
        bundled = data_dir() / "charts" / f"{document}.json"
        if bundled.exists():
            path = bundled
        else:
            raise FileNotFoundError(f"no chart file or bundled chart named {str(document)!r}")
    return loads(path.read_text(encoding="utf-8"), where=str(path))


# -- propagation ----------------------------------------------------------------

def run_to_final(chart: Chart) -> Chart:
    """Apply every differential in page order and drop classes that die.

    Each differential kills p^image_exp of order in both its source and its
    target.  The source's surviving subgroup must be generated by
    p^source_mult_exp times the original generator when the differential
    fires.
    """
    if chart.final:
        return chart
    check(chart, chart.name or None)
    initial = chart.by_name()
    current = {c.name: c.order_exp for c in chart.classes}
    for d in sorted(chart.differentials, key=lambda d: d.page):
        killed = initial[d.source].order_exp - current[d.source]
        if killed != d.source_mult_exp:
            raise ChartError(
                f"{d.label()}: surviving part of {d.source} is generated by "
                f"p^{killed} times the generator, not p^{d.source_mult_exp}",
                chart.name or None,
            )
        if d.image_exp > current[d.source] or d.image_exp > current[d.target]:
            raise ChartError(
                f"{d.label()}: image order {chart.p}^{d.image_exp} exceeds what "
                f"survives to E_{d.page} ({d.source}: {current[d.source]}, "
                f"{d.target}: {current[d.target]})",
                chart.name or None,
            )
        current[d.source] -= d.image_exp
        current[d.target] -= d.image_exp
    survivors = tuple(
        replace(c, order_exp=current[c.name]) for c in chart.classes if current[c.name] > 0
    )
    dead = chart.dead + tuple(c for c in chart.classes if current[c.name] == 0)
    return replace(chart, classes=survivors, dead=dead, final=True)


def truncate(chart: Chart, max_filtration: Union[int, float, None] = None) -> Chart:
    """Restrict to filtration <= max_filtration (default: the chart's bound).

    Differentials entering the range from above are cut; their targets keep
    the order they would have lost.  Works on E_2 and on final charts.
    """
    if max_filtration is None:
        max_filtration = chart.default_bound
    if max_filtration == math.inf:
        return chart
    bound = int(max_filtration)
    inside = {c.name for c in chart.classes + chart.dead if c.filtration <= bound}

    retained, entering = [], []
    for d in chart.differentials:
        if d.source in inside:
            retained.append(d)
        elif d.target in inside:
            entering.append(d)

    classes = [c for c in chart.classes if c.name in inside]
    dead = [c for c in chart.dead if c.name in inside]
    if chart.final:
        restore = Counter()
        for d in entering:
            restore[d.target] += d.image_exp
        classes = [replace(c, order_exp=c.order_exp + restore.pop(c.name, 0)) for c in classes]
        classes += [replace(c, order_exp=restore[c.name]) for c in dead if c.name in restore]
        dead = [c for c in dead if c.name not in restore]

    prior = chart.max_filtration
    return replace(
        chart,
        classes=tuple(classes),
        differentials=tuple(retained),
        extensions=tuple(
            e for e in chart.extensions if e.lower in inside and e.upper in inside
        ),
        entering=chart.entering + tuple(entering),
        dead=tuple(dead),
        max_filtration=bound if prior is None else min(prior, bound),
    )


# -- reading off groups ----------------------------------------------------------

def _require_final(chart: Chart) -> None:
    if not chart.final:
        raise ValueError(f"chart {chart.name!r} is not at its final page; run_to_final first")


def degree_order(chart: Chart, n: int) -> int:
    """Order of the abutment in total degree n: product of surviving class orders."""
    _require_final(chart)
    return chart.p ** sum(c.order_exp for c in chart.in_degree(n))


def active_extensions(chart: Chart, n: int) -> list[HiddenExtension]:
    alive = {c.name for c in chart.in_degree(n)}
    return [e for e in chart.extensions if e.lower in alive and e.upper in alive]


def assemble(chart: Chart, n: int) -> AbelianPGroup:
    """Group in total degree n, merging classes joined by hidden extensions.

    Extensions whose ends did not both survive are inactive.
    """
    _require_final(chart)
    survivors = {c.name: c for c in chart.in_degree(n)}
    by_name = {c.name: c for c in chart.classes + chart.dead}
    for e in chart.extensions:
        lo, up = by_name.get(e.lower), by_name.get(e.upper)
        if lo is not None and up is not None and lo.degree != up.degree:
            raise ChartError(f"extension {e.lower} -> {e.upper} links different degrees", chart.name)
    exts = active_extensions(chart, n)
    problems = _extension_problems(exts, survivors)
    if problems:
        raise ChartError(problems, chart.name or None)
    upper_of = {e.lower: e.upper for e in exts}
    has_lower = {e.upper for e in exts}
    exponents = []
    for name in survivors:
        if name in has_lower:
            continue
        total, node = 0, name
        while node is not None:
            total += survivors[node].order_exp
            node = upper_of.get(node)
        exponents.append(total)
    return AbelianPGroup(chart.p, tuple(exponents))


def is_conjectural(chart: Chart, n: int) -> bool:
    """True if anything feeding total degree n rests on conjectural data."""
    if chart.status == "conjectural":
        return True
    located = {c.name: c for c in chart.classes + chart.dead}
    degrees = lambda d: {located[x].degree for x in (d.source, d.target) if x in located}
    for d in chart.differentials + chart.entering:
        if d.status == "conjectural" and n in degrees(d):
            return True
    return any(
        e.status == "conjectural" and located.get(e.lower) is not None
        and located[e.lower].degree == n
        for e in chart.extensions
    )


def tr_counterpart(chart: Chart, n: int) -> Optional[tuple[int, int, int]]:
    """(r, lambda_index, d) of the TR-group this chart computes in odd degree n.

    The truncated chart of C_{p^k} shifted by lambda_L computes
    TR^{k+1}_{n - lambda_L}; the full Tate chart computes
    TR^k_{n - lambda_{L/p}}.  Returns None when the index is not of the form
    p^(r-1) d with d prime to p, or when n is too small for the comparison
    map to be an isomorphism.
    """
    if n % 2 == 0:
        return None
    p, k = chart.p, chart.subgroup_exp
    if chart.max_filtration is not None:
        r, lam = k + 1, chart.lambda_shift
    else:
        r, lam = k, chart.lambda_shift // p
    if n <= 2 * lam or lam == 0:
        return None
    d, rem = divmod(lam, p ** (r - 1))
    if rem or d % p == 0:
        return None
    return r, lam, d


def tr_expected_order(chart: Chart, n: int) -> Optional[int]:
    """p-part of the integral TR order matching (chart, n), from the order formula."""
    target = tr_counterpart(chart, n)
    if target is None:
        return None
    r, _, d = target
    return chart.p ** p_valuation(tr_order((n - 1) // 2, chart.p, d, r), chart.p)


@dataclass
class AuditReport:
    chart: str
    degree: int
    observed: int
    expected: int
    match: bool
    conjectural: bool
    truncated_at: Optional[int]
    group: str = ""
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "chart": self.chart,
            "degree": self.degree,
            "observed": self.observed,
            "expected": self.expected,
            "match": self.match,
            "status": "conjectural" if self.conjectural else "proven",
            "truncated_at": self.truncated_at,
            "group": self.group,
        }


def audit_against_tr(chart: Chart, n: int, expected: int) -> AuditReport:
    """Compare the chart's order in degree n with an expected order."""
    final = run_to_final(chart)
    observed = degree_order(final, n)
    return AuditReport(
        chart=chart.name,
        degree=n,
        observed=observed,
        expected=expected,
        match=observed == expected,
        conjectural=is_conjectural(final, n),
        truncated_at=final.max_filtration,
        group=str(assemble(final, n)),
    )
