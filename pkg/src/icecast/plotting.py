"""Value-vs-time charts for observation series: SVG files and terminal art.

The concentration axis is always [0, 1]. Gap days split the line: every run
of consecutive observed days becomes its own polyline (isolated days render
as dots), so missing data is visible as a break rather than interpolated.
"""

from __future__ import annotations

from datetime import date

from .ingest import IceObservation


def _runs(records: list[IceObservation]) -> list[list[IceObservation]]:
    runs: list[list[IceObservation]] = []
    prev: date | None = None
    for r in sorted(records, key=lambda r: r.timestamp):
        day = r.timestamp.date()
        if prev is not None and (day - prev).days == 1:
            runs[-1].append(r)
        else:
            runs.append([r])
        prev = day
    return runs


def render_svg(records: list[IceObservation], width: int = 800, height: int = 400) -> str:
    if not records:
        raise ValueError("nothing to plot: empty series")
    margin_left, margin_right, margin_top, margin_bottom = 60, 20, 20, 40
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom

    days = sorted(r.timestamp.date() for r in records)
    d0, d1 = days[0], days[-1]
    span = max((d1 - d0).days, 1)

    def x(day: date) -> float:
        return margin_left + plot_w * (day - d0).days / span

    def y(conc: float) -> float:
        return margin_top + plot_h * (1.0 - conc)

    def pt(r: IceObservation) -> str:
        return f"{x(r.timestamp.date()):.2f},{y(r.concentration):.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    # frame and concentration gridlines at 0, 0.5, 1
    for conc in (0.0, 0.5, 1.0):
        yy = y(conc)
        parts.append(
            f'<line x1="{margin_left}" y1="{yy:.2f}" x2="{width - margin_right}" y2="{yy:.2f}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin_left - 8}" y="{yy + 4:.2f}" text-anchor="end" '
            f'font-size="12" font-family="sans-serif">{conc:.1f}</text>'
        )
    parts.append(
        f'<line x1="{margin_left}" y1="{margin_top}" x2="{margin_left}" '
        f'y2="{height - margin_bottom}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{margin_left}" y1="{height - margin_bottom}" x2="{width - margin_right}" '
        f'y2="{height - margin_bottom}" stroke="black" stroke-width="1"/>'
    )
    for run in _runs(records):
        if len(run) == 1:
            parts.append(
                f'<circle cx="{x(run[0].timestamp.date()):.2f}" '
                f'cy="{y(run[0].concentration):.2f}" r="2.5" fill="#1f77b4"/>'
            )
        else:
            pts = " ".join(pt(r) for r in run)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
            )
    parts.append(
        f'<text x="{margin_left}" y="{height - 10}" font-size="12" '
        f'font-family="sans-serif">{d0.isoformat()}</text>'
    )
    parts.append(
        f'<text x="{width - margin_right}" y="{height - 10}" text-anchor="end" '
        f'font-size="12" font-family="sans-serif">{d1.isoformat()}</text>'
    )
    parts.append(
        f'<text x="14" y="{margin_top + plot_h / 2:.0f}" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 14 {margin_top + plot_h / 2:.0f})" '
        f'text-anchor="middle">concentration</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_ascii(records: list[IceObservation], width: int = 72, height: int = 16) -> str:
    if not records:
        raise ValueError("nothing to plot: empty series")
    days = sorted(r.timestamp.date() for r in records)
    d0, d1 = days[0], days[-1]
    span = max((d1 - d0).days, 1)
    cells = [[" "] * width for _ in range(height)]
    for r in records:
        col = round((width - 1) * (r.timestamp.date() - d0).days / span)
        row = round((height - 1) * (1.0 - r.concentration))
        cells[row][col] = "*"
    labels = {0: "1.0 ", height // 2: "0.5 ", height - 1: "0.0 "}
    lines = []
    for i, row in enumerate(cells):
        lines.append(labels.get(i, "    ") + "|" + "".join(row))
    lines.append("    +" + "-" * width)
    lines.append(f"     {d0.isoformat()}{d1.isoformat():>{max(width - 10, 12)}}")
    return "\n".join(lines) + "\n"
