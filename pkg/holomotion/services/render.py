import base64
import io
import math

import numpy as np
from PIL import Image

from holomotion.config import settings
from holomotion.logger import logger
from holomotion.models.domain import StrandKind
from holomotion.services.braid import BraidWord, crossings
from holomotion.services.continuation import StrandTracks
from holomotion.services.expressions import format_complex
from holomotion.services.flow import ContinuousMotionGrid
from holomotion.services.motion import MotionFamily
from holomotion.templating import templates

# Diagram geometry (px)
BRAID_WIDTH = 720
BRAID_HEIGHT = 400
BRAID_MARGIN = 48
MAX_POLYLINE_POINTS = 400
HEATMAP_SIZE = 480
HEATMAP_MARGIN = 16

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _coordinate(value: float) -> str:
    return f"{value:.2f}"


def braid_svg(tracks: StrandTracks, word: BraidWord, title: str) -> str:
    """Projected real parts of all strands against path time, one marker per crossing."""
    angle = word.projection_angle
    projected = (tracks.positions * complex(math.cos(angle), math.sin(angle))).real
    times = tracks.times
    low, high = float(projected.min()), float(projected.max())
    span = (high - low) or 1.0
    plot_width = BRAID_WIDTH - 2 * BRAID_MARGIN
    plot_height = BRAID_HEIGHT - 2 * BRAID_MARGIN

    def x_of(t):
        return BRAID_MARGIN + plot_width * np.asarray(t)

    def y_of(value):
        return BRAID_HEIGHT - BRAID_MARGIN - plot_height * (np.asarray(value) - low) / span

    keep = np.unique(np.linspace(0, len(times) - 1, min(len(times), MAX_POLYLINE_POINTS)).round().astype(int))
    strands = []
    for k in range(tracks.strand_count):
        xs, ys = x_of(times[keep]), y_of(projected[keep, k])
        strands.append(
            {
                "points": " ".join(f"{_coordinate(x)},{_coordinate(y)}" for x, y in zip(xs, ys)),
                "color": PALETTE[k % len(PALETTE)],
                "label": "0" if k == 0 else "1" if k == 1 else f"p{k}",
                "label_y": _coordinate(float(y_of(projected[-1, k]))),
            }
        )

    markers = []
    for crossing in crossings(tracks, angle):
        value = np.interp(crossing.time, times, projected[:, crossing.left])
        markers.append(
            {
                "x": _coordinate(float(x_of(crossing.time))),
                "y": _coordinate(float(y_of(value))),
                "sign": crossing.sign,
                "position": crossing.position,
                "time": f"{crossing.time:.4f}",
            }
        )

    return templates.get_template("braid.svg.j2").render(
        title=title,
        word=word.to_tokens() or "empty",
        angle=f"{angle:.4f}",
        width=BRAID_WIDTH,
        height=BRAID_HEIGHT,
        margin=BRAID_MARGIN,
        strands=strands,
        crossings=markers,
    )


def beltrami_png(field: np.ndarray, scale: int = 4) -> bytes:
    """Grayscale raster of |mu| per cell (black = 1, white = 0), top row = largest Im."""
    shade = np.clip(1.0 - np.nan_to_num(field, nan=1.0), 0.0, 1.0)
    pixels = (255.0 * shade).round().astype(np.uint8)[::-1]
    image = Image.fromarray(pixels)
    image = image.resize((pixels.shape[1] * scale, pixels.shape[0] * scale), Image.Resampling.NEAREST)
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def beltrami_svg(grid: ContinuousMotionGrid, index: int) -> str:
    sample = grid.samples[index]
    field = grid.beltrami_field(index)
    extent = grid.step * grid.cells
    markers = []
    for z in sample.markers:
        if not np.isfinite(z):
            continue
        u, v = (z.real - grid.origin.real) / extent, (z.imag - grid.origin.imag) / extent
        if 0.0 <= u <= 1.0 and 0.0 <= v <= 1.0:
            markers.append(
                {
                    "x": _coordinate(HEATMAP_MARGIN + HEATMAP_SIZE * u),
                    "y": _coordinate(HEATMAP_MARGIN + 24 + HEATMAP_SIZE * (1.0 - v)),
                }
            )
    png = base64.b64encode(beltrami_png(field)).decode("ascii")
    logger.debug(f"Rendered |mu| heat map for grid sample {index}")
    return templates.get_template("beltrami.svg.j2").render(
        parameter=format_complex(sample.parameter),
        beltrami_sup=f"{sample.beltrami_sup:.4e}",
        size=HEATMAP_SIZE,
        margin=HEATMAP_MARGIN,
        png=png,
        markers=markers,
    )


def motion_toml(family: MotionFamily) -> str:
    """The family as a motion definition file that loads back to the same strands."""
    domain = family.domain
    strands = [
        {
            "index": k + 2,
            "key": "expr" if strand.kind == StrandKind.CLOSED_FORM else "polynomial",
            "text": strand.text(),
        }
        for k, strand in enumerate(family.strands)
    ]
    return templates.get_template("motion.toml.j2").render(
        version=settings.REPORT_VERSION,
        domain={
            "kind": domain.kind.value,
            "basepoint": format_complex(domain.basepoint),
            "center": format_complex(domain.center),
            "radius": repr(domain.radius),
            "inner_radius": repr(domain.inner_radius) if domain.inner_radius else "",
            "punctures": [format_complex(p) for p in domain.punctures],
        },
        points=[format_complex(p) for p in family.base.punctures],
        strands=strands,
    )
