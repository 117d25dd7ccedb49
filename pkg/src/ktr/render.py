"""Text grid and SVG renderings of charts.

Both put total degree on the x-axis and filtration on the y-axis.  Classes
that survive to the final page are marked (circled in SVG).
"""

from __future__ import annotations

from typing import Optional
from xml.sax.saxutils import escape

from ktr.charts import Chart, run_to_final


def _survivors(chart: Chart, final: Optional[Chart]) -> dict[str, int]:
    if final is None:
        final = run_to_final(chart)
    return {c.name: c.order_exp for c in final.classes}


def _all_classes(chart: Chart):
    return list(chart.classes) + list(chart.dead)


def render_grid(chart: Chart, final: Optional[Chart] = None) -> str:
    survivors = _survivors(chart, final)
    classes = _all_classes(chart)
    p = chart.p
    head = (
        f"{chart.name or '(unnamed chart)'}: C_{p ** chart.subgroup_exp}, "
        f"{chart.coefficient_label()}, lambda_{chart.lambda_shift}"
    )
    if chart.max_filtration is not None:
        head += f", filtration <= {chart.max_filtration}"
    lines = [head]
    if not classes:
        lines.append("(empty chart)")
        return "\n".join(lines) + "\n"

    degrees = sorted({c.degree for c in classes})
    width = max(
        max(len(f"({c.name} Z/{p ** c.order_exp})") for c in classes),
        len("deg 00"),
    )
    lines.append("filt | " + " | ".join(f"deg {n}".ljust(width) for n in degrees))
    lines.append("-----+-" + "-+-".join("-" * width for _ in degrees))
    for f in sorted({c.filtration for c in classes}, reverse=True):
        row = []
        for n in degrees:
            here = [c for c in classes if c.filtration == f and c.degree == n]
            cells = []
            for c in here:
                if c.name in survivors:
                    cells.append(f"({c.name} Z/{p ** survivors[c.name]})")
                else:
                    cells.append(f"{c.name} Z/{p ** c.order_exp}")
            row.append(", ".join(cells).ljust(width))
        lines.append(f"{f:>4} | " + " | ".join(row))
    if chart.differentials or chart.entering:
        lines.append("")
        for d in chart.differentials:
            lines.append(f"  {d.label()}  [{d.status}]")
        for d in chart.entering:
            lines.append(f"  {d.label()}  [{d.status}, enters from above the bound]")
    if chart.extensions:
        lines.append("")
        for e in chart.extensions:
            lines.append(f"  {p}·{e.lower} ~> {e.upper}  [{e.status}]")
    lines.append("")
    lines.append("(...) survives to the final page")
    return "\n".join(lines) + "\n"


def render_svg(chart: Chart, final: Optional[Chart] = None, cell: int = 40) -> str:
    survivors = _survivors(chart, final)
    classes = _all_classes(chart)
    margin = 60
    if classes:
        degrees = sorted({c.degree for c in classes})
        dmin, dmax = degrees[0], degrees[-1]
        fmin = min(c.filtration for c in classes)
        fmax = max(c.filtration for c in classes)
    else:
        dmin = dmax = fmin = fmax = 0
    col_w = cell * 5
    width = margin * 2 + (dmax - dmin + 1) * col_w
    height = margin * 2 + (fmax - fmin + 1) * (cell // 2) + cell

    def xy(c):
        x = margin + (c.degree - dmin) * col_w + col_w // 2
        y = margin + (fmax - c.filtration) * (cell // 2) + cell // 2
        return x, y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="10">',
        '<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" '
        'orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="#444"/></marker></defs>',
        f'<text x="{margin}" y="20" font-size="12">{escape(chart.name or "chart")}</text>',
    ]
    for k in range(dmax - dmin + 2):
        x = margin + k * col_w
        out.append(f'<line x1="{x}" y1="{margin}" x2="{x}" y2="{height - margin}" stroke="#ddd"/>')
    for k in range(dmax - dmin + 1):
        x = margin + k * col_w + col_w // 2
        out.append(f'<text x="{x}" y="{height - margin + 16}" text-anchor="middle">{dmin + k}</text>')
    if chart.max_filtration is not None and fmin <= chart.max_filtration <= fmax:
        y = margin + (fmax - chart.max_filtration) * (cell // 2) + cell // 2 + cell // 4
        out.append(
            f'<line x1="{margin}" y1="{y}" x2="{width - margin}" y2="{y}" '
            'stroke="#c33" stroke-dasharray="4 3"/>'
        )

    pos = {c.name: xy(c) for c in classes}
    for c in classes:
        x, y = pos[c.name]
        out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="#000"/>')
        if c.name in survivors:
            out.append(f'<circle class="survivor" cx="{x}" cy="{y}" r="8" fill="none" stroke="#06c"/>')
        out.append(
            f'<text x="{x + 10}" y="{y + 3}">{escape(c.name)} '
            f'Z/{chart.p ** c.order_exp}</text>'
        )
        out.append(f'<text x="{margin - 8}" y="{y + 3}" text-anchor="end">{c.filtration}</text>')
    for d in chart.differentials:
        if d.source not in pos or d.target not in pos:
            continue
        (x1, y1), (x2, y2) = pos[d.source], pos[d.target]
        dash = ' stroke-dasharray="5 3"' if d.status == "conjectural" else ""
        out.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#444"{dash} '
            'marker-end="url(#arrow)"/>'
        )
    for e in chart.extensions:
        if e.lower in pos and e.upper in pos:
            (x1, y1), (x2, y2) = pos[e.lower], pos[e.upper]
            out.append(
                f'<path d="M{x1},{y1} Q{x1 - 25},{(y1 + y2) // 2} {x2},{y2}" '
                'fill="none" stroke="#393" stroke-dasharray="2 2"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
