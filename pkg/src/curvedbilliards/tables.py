"""Deterministic CSV/JSON artifact writers.

Every table gets a header row; floats are printed with 17 significant
digits, enough to round-trip IEEE doubles, so identical inputs produce
byte-identical files.  Reflection itineraries are encoded as dash-joined
obstacle numbers ("1-2-1", empty when there are none).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .billiard import TrajectoryRecord
from .fronts import Front
from .scene import Scene
from .spectra import Spectrum, UniquenessRow

__all__ = [
    "FLOAT_FMT",
    "format_value",
    "encode_itinerary",
    "write_table",
    "write_json",
    "spectrum_table",
    "front_table",
    "trajectory_table",
    "uniqueness_table",
    "scene_summary",
]

FLOAT_FMT = "%.17g"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def encode_itinerary(symbols: Sequence[int]) -> str:
    return "-".join(str(int(s)) for s in symbols)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write one CSV with a header row; returns the path."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def _jsonable(obj):
    """Recursively coerce to plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


# -- concrete tables ---------------------------------------------------------

SPECTRUM_HEADER = (
    "x_param", "theta", "y_param", "exit_theta", "time",
    "n_reflections", "itinerary", "status",
)


def spectrum_table(spectrum: Spectrum):
    rows = [
        (
            r.x_param, r.theta, r.y_param, r.exit_theta, r.time,
            r.n_reflections, encode_itinerary(r.itinerary), r.status,
        )
        for r in spectrum.records
    ]
    return SPECTRUM_HEADER, rows


FRONT_HEADER = ("u", "x", "y", "omega1", "omega2", "f")


def front_table(front: Front):
    rows = [
        (u, p[0], p[1], w[0], w[1], f)
        for u, p, w, f in zip(front.us, front.points, front.normals, front.f)
    ]
    return FRONT_HEADER, rows


TRAJECTORY_HEADER = ("index", "kind", "curve", "time", "x", "y", "u", "incidence")


def trajectory_table(record: TrajectoryRecord):
    """Event table of one trajectory: launch, every crossing, final state."""
    rows = [
        (0, "launch", "", record.initial.time,
         record.initial.position[0], record.initial.position[1],
         math.nan, math.nan)
    ]
    for i, e in enumerate(record.events, start=1):
        if e.curve == "bounding":
            kind = "crossing"
        elif e.tangential:
            kind = "graze"
        else:
            kind = "reflection"
        rows.append((i, kind, str(e.curve), e.time,
                     e.point[0], e.point[1], e.u, e.incidence))
    rows.append((len(rows), "final", "", record.final.time,
                 record.final.position[0], record.final.position[1],
                 math.nan, math.nan))
    return TRAJECTORY_HEADER, rows


UNIQUENESS_HEADER = ("eps", "hausdorff", "sup_dev", "mean_dev", "unmatched", "note")


def uniqueness_table(rows: Sequence[UniquenessRow]):
    return UNIQUENESS_HEADER, [
        (r.eps, r.hausdorff, r.sup_dev, r.mean_dev, r.unmatched, r.note)
        for r in rows
    ]


def scene_summary(scene: Scene) -> dict:
    """Scene block shared by the artifact metadata files."""
    return {
        "phi": scene.chart.source,
        "bounding_radius": scene.bounding.base_radius,
        "n_obstacles": len(scene.obstacles),
        "tangency": scene.tangency,
        "rtol": scene.rtol,
        "atol": scene.atol,
    }
