"""Space-time SVG diagrams: x = position, y = time, one polyline per particle.

Arrows trace their ballistic path until annihilation (or the end of the
plotted time range if they survive); clusters are vertical segments that end
when their last blockade unit is removed.  Emission is capped at 5000
particles to keep files tractable.
"""

from typing import Optional

import numpy as np

from .configs import LEFT, RIGHT, STILL, Configuration
from .resolver import ARROW_ARROW, Outcome

MAX_DIAGRAM_SITES = 5000

_STYLE = {
    "left": "stroke:#c03028;stroke-width:1.2;fill:none",
    "right": "stroke:#2864c0;stroke-width:1.2;fill:none",
    "cluster": "stroke:#222222;stroke-width:2.4;fill:none",
}


def _death_times(config: Configuration, outcome: Outcome):
    """Per-site annihilation time, or None for survivors and vacant sites."""
    death = [None] * config.n
    for rec in outcome.collisions:
        a, b = rec.site_a - 1, rec.site_b - 1
        if rec.kind == ARROW_ARROW:
            death[a] = rec.time
            death[b] = rec.time
        else:
            death[a] = rec.time  # the arrow
            if rec.remaining == 0:
                death[b] = rec.time
    return death


def render_svg(config: Configuration, outcome: Outcome,
               width: int = 800, height: int = 600,
               comment: Optional[str] = None) -> str:
    """Render the space-time diagram of a resolved configuration."""
    if config.n > MAX_DIAGRAM_SITES:
        raise ValueError(
            "diagram limited to %d particles (got %d); resolve a smaller "
            "window or skip the SVG output" % (MAX_DIAGRAM_SITES, config.n))
    death = _death_times(config, outcome)
    t_end = max([rec.time for rec in outcome.collisions], default=1.0) * 1.1
    t_end = max(t_end, 1.0)

    xs = [float(x) for x in config.positions]
    # survivors keep moving until t_end
    for i in range(config.n):
        if config.velocities[i] != STILL and death[i] is None:
            xs.append(float(config.positions[i])
                      + int(config.velocities[i]) * t_end)
    x_lo = min(xs + [config.origin]) - 1.0
    x_hi = max(xs + [config.origin]) + 1.0

    def sx(x):
        return (x - x_lo) / (x_hi - x_lo) * (width - 20) + 10

    def sy(t):
        return height - 10 - t / t_end * (height - 20)

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
             'viewBox="0 0 %d %d">' % (width, height, width, height)]
    if comment is not None:
        parts.append("<!-- %s -->" % comment.replace("--", "&#45;&#45;"))
    parts.append('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" '
                 'style="stroke:#bbbbbb;stroke-width:0.8;stroke-dasharray:4 3"/>'
                 % (sx(config.origin), sy(0.0), sx(config.origin), sy(t_end)))
    for i in range(config.n):
        v = int(config.velocities[i])
        x0 = float(config.positions[i])
        if v == STILL and config.sizes[i] == 0:
            continue  # vacant site
        t1 = death[i] if death[i] is not None else t_end
        x1 = x0 + v * t1
        kind = "left" if v == LEFT else ("right" if v == RIGHT else "cluster")
        parts.append('<polyline points="%.2f,%.2f %.2f,%.2f" style="%s"/>'
                     % (sx(x0), sy(0.0), sx(x1), sy(t1), _STYLE[kind]))
    for rec in outcome.collisions:
        parts.append('<circle cx="%.2f" cy="%.2f" r="2.2" fill="#111111"/>'
                     % (sx(rec.position), sy(rec.time)))
    parts.append("</svg>")
    return "\n".join(parts)
