"""SVG rendering of document timelines."""

from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .induction import DocumentTimeline

WIDTH = 640
LABEL_WIDTH = 140
ROW_HEIGHT = 24
BAR_HEIGHT = 14
MARGIN = 10


def render_timeline_svg(timeline: DocumentTimeline, labels: Optional[Sequence[str]] = None) -> str:
    """One horizontal bar per predicate, scaled so the latest end meets the right edge."""
    labels = list(labels) if labels is not None else list(timeline.texts)
    if len(labels) != len(timeline):
        raise ValueError("need one label per predicate")
    n = len(timeline)
    height = 2 * MARGIN + max(n, 1) * ROW_HEIGHT
    plot = WIDTH - LABEL_WIDTH - 2 * MARGIN
    max_end = max(timeline.ends, default=1.0)
    scale = plot / max_end if max_end > 0 else 0.0

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">',
        '<g font-family="sans-serif" font-size="11">',
    ]
    for k, (label, begin, duration) in enumerate(zip(labels, timeline.begins, timeline.durations)):
        y = MARGIN + k * ROW_HEIGHT
        x = LABEL_WIDTH + MARGIN + begin * scale
        w = duration * scale
        out.append(
            f'<text x="{LABEL_WIDTH:.3f}" y="{y + BAR_HEIGHT - 3:.3f}" text-anchor="end">{escape(str(label))}</text>'
        )
        out.append(
            f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{BAR_HEIGHT}" fill="#4a6fa5">'
            f"<title>{escape(str(label))}: begin {begin:.4g}, duration {duration:.4g}</title></rect>"
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
