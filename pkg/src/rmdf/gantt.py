"""Gantt rendering of simulation traces (SVG or plain text)."""

from xml.sax.saxutils import escape

from .arith import decimal_str, rat_str

ROW_HEIGHT = 28
LABEL_WIDTH = 150
PLOT_WIDTH = 800
MARGIN = 20
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
           "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")


def _rows(trace):
    """Actors with at least one non-empty executing interval, in trace order."""
    ivs = trace.intervals()
    return [(a, ivs[a]) for a in trace.actors if ivs.get(a)]


def export_gantt(trace, format="svg"):
    if format == "svg":
        return gantt_svg(trace)
    if format == "text":
        return gantt_text(trace)
    raise ValueError(f"unknown gantt format {format!r} (svg or text)")


def gantt_text(trace):
    lines = []
    for actor, ivs in _rows(trace):
        spans = " ".join(f"[{rat_str(s)},{rat_str(e)}]" + ("x" if disc else "")
                         for s, e, _, disc in ivs)
        lines.append(f"{actor}: {spans}")
    return "\n".join(lines) + ("\n" if lines else "")


def gantt_svg(trace):
    rows = _rows(trace)
    span = trace.horizon or max((e for _, ivs in rows for _, e, *_ in ivs), default=1)
    scale = PLOT_WIDTH / float(span) if span else 1.0
    height = 2 * MARGIN + ROW_HEIGHT * max(len(rows), 1) + 30
    width = 2 * MARGIN + LABEL_WIDTH + PLOT_WIDTH
    x0, axis_y = MARGIN + LABEL_WIDTH, MARGIN + ROW_HEIGHT * max(len(rows), 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
           'patternTransform="rotate(45)"><rect width="6" height="6" fill="white"/>'
           '<line x1="0" y1="0" x2="0" y2="6" stroke="black" stroke-width="2"/>'
           '</pattern></defs>']
    for i, (actor, ivs) in enumerate(rows):
        y = MARGIN + i * ROW_HEIGHT
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<g class="row" data-actor="{escape(actor, {chr(34): "&quot;"})}">')
        out.append(f'<text x="{MARGIN}" y="{y + ROW_HEIGHT * 0.65:.1f}">{escape(actor)}</text>')
        for s, e, job, disc in ivs:
            fill = "url(#hatch)" if disc else color
            cls = "job discarded" if disc else "job"
            out.append(f'<rect class="{cls}" x="{x0 + float(s) * scale:.3f}" y="{y + 4}" '
                       f'width="{max(float(e - s) * scale, 0.5):.3f}" height="{ROW_HEIGHT - 8}" '
                       f'fill="{fill}" stroke="black" stroke-width="0.5">'
                       f'<title>{escape(actor)} job {job}: {decimal_str(s)}-{decimal_str(e)} ms'
                       f'</title></rect>')
        out.append("</g>")
    out.append(f'<line class="axis" x1="{x0}" y1="{axis_y}" x2="{x0 + PLOT_WIDTH}" '
               f'y2="{axis_y}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{x0}" y1="{MARGIN}" x2="{x0}" y2="{axis_y}" stroke="black"/>')
    for k in range(11):
        t = span * k / 10
        x = x0 + float(t) * scale
        out.append(f'<line x1="{x:.3f}" y1="{axis_y}" x2="{x:.3f}" y2="{axis_y + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.3f}" y="{axis_y + 18}" text-anchor="middle">'
                   f'{decimal_str(t, 1)}</text>')
    out.append(f'<text x="{x0 + PLOT_WIDTH}" y="{height - 4}" text-anchor="end">time (ms)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
