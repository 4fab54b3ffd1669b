"""Scenario files: one YAML document describing a scene and its experiments.

A scenario validates into a :class:`~curvedbilliards.scene.Scene` plus typed
experiment sections; every failure names the offending field with a dotted
path (``metric``, ``obstacles[1].radius``, ``caps.max_time``, ...).  Unknown
keys are rejected the same way, so typos surface instead of being ignored.

Schema sketch (see the shipped ``scenarios/`` directory for full files)::

    name: two-disc                      # label; defaults to the file stem
    metric:
      phi: "0"                          # log conformal factor expression
      chart_radius: null                # optional declared chart domain
    bounding:   {center: [0, 0], radius: 4.0}
    obstacles:
      - {center: [-1.2, 0], radius: 0.5, cos: [0.0, 0.01], sin: []}
    tolerances: {rtol: 1.0e-9, atol: 1.0e-10, tangency: 1.0e-6}
    caps:       {max_time: 200.0, max_reflections: 10000}
    grid: [64, 64]                      # launch nodes: boundary x angle
    delta: 0.1                          # grazing margin on the angle axis
    seed: 0
    out: out
    front:      {curve: 0, span: [0.76, 0.80], flight: 0.3, times: [0.5]}
    itinerary:  {x: 0.1, theta: 0.3}
    gradcheck:  {limit: 200, h: 1.0e-5}
    conjugacy:  {pairs: 50, boundary_pairs: 20}
    uniqueness: {epsilons: [0.0, 0.01], harmonic: 2, obstacle: 0}
    verify:     {samples: 6, grid: [6, 6], gradcheck: 10, triples: 200}

Every numeric default lives in the single :data:`DEFAULTS` table below.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple, Union

import yaml

from .exprdsl import ExprError
from .manifold import MetricChart
from .scene import BoundaryCurve, Scene

__all__ = [
    "DEFAULTS",
    "ScenarioError",
    "CurveSpec",
    "FrontSpec",
    "ItinerarySpec",
    "GradcheckSpec",
    "ConjugacySpec",
    "UniquenessSpec",
    "VerifySpec",
    "Scenario",
    "load_scenario",
    "scenario_from_mapping",
    "build_scene",
]

# the one table every numeric default comes from
DEFAULTS = {
    "tolerances": {"rtol": 1e-9, "atol": 1e-10, "tangency": 1e-6},
    "caps": {"max_time": 200.0, "max_reflections": 10_000},
    "grid": (64, 64),
    "delta": 0.1,
    "seed": 0,
    "out": "out",
    "front": {"samples": 256, "times": (), "eps": 1e-3, "reflect": False},
    "itinerary": {"x": 0.1, "theta": 0.3},
    "gradcheck": {"limit": 200, "h": 1e-5},
    "conjugacy": {
        "pairs": 50,
        "boundary_pairs": 20,
        "t_min": 0.1,
        "t_max": 5.0,
        "margin": 0.25,
        "boundary_flight": 6.0,
    },
    "uniqueness": {
        "epsilons": (0.0, 0.01, 0.02, 0.05, 0.1),
        "harmonic": 2,
        "obstacle": 0,
    },
    "verify": {"samples": 6, "grid": (6, 6), "gradcheck": 10, "triples": 200},
}


class ScenarioError(ValueError):
    """Scenario validation failure; the message starts with the field path."""


def _fail(path: str, msg: str):
    raise ScenarioError(f"{path}: {msg}")


# -- leaf coercions ----------------------------------------------------------


def _as_float(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(path, f"expected a number, got {val!r}")
    return float(val)


def _as_int(val, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(path, f"expected an integer, got {val!r}")
    return int(val)


def _as_bool(val, path: str) -> bool:
    if not isinstance(val, bool):
        _fail(path, f"expected true/false, got {val!r}")
    return val


def _as_str(val, path: str) -> str:
    if not isinstance(val, str):
        _fail(path, f"expected a string, got {val!r}")
    return val


def _as_pair(val, path: str) -> Tuple[float, float]:
    if not isinstance(val, (list, tuple)) or len(val) != 2:
        _fail(path, f"expected a pair of numbers, got {val!r}")
    return (_as_float(val[0], f"{path}[0]"), _as_float(val[1], f"{path}[1]"))

def _as_floats(val, path: str) -> Tuple[float, ...]:
    if not isinstance(val, (list, tuple)):
        _fail(path, f"expected a list of numbers, got {val!r}")
    return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(val))


def _as_grid(val, path: str) -> Tuple[int, int]:
    """Accept [n, m] or the flag spelling 'NxM'."""
    if isinstance(val, str):
        parts = val.lower().split("x")
        if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
            _fail(path, f"expected 'NxM', got {val!r}")
        val = [int(p) for p in parts]
    if not isinstance(val, (list, tuple)) or len(val) != 2:
        _fail(path, f"expected a grid pair, got {val!r}")
    n, m = (_as_int(v, f"{path}[{i}]") for i, v in enumerate(val))
    if n < 1 or m < 1:
        _fail(path, f"grid sides must be positive, got {n}x{m}")
    return n, m


# -- mapping plumbing --------------------------------------------------------


def _as_mapping(val, path: str) -> dict:
    if not isinstance(val, dict):
        _fail(path, f"expected a mapping, got {val!r}")
    return val


def _check_keys(data: dict, allowed, path: str):
    for key in data:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), "unknown field")


def _section(data: dict, key: str, required: bool = False) -> Optional[dict]:
    if key not in data:
        if required:
            _fail(key, "required section is missing")
        return None
    return _as_mapping(data[key], key)


def _merged(section: Optional[dict], key: str) -> dict:
    """Section contents on top of its DEFAULTS entry."""
    out = dict(DEFAULTS[key])
    if section:
        _check_keys(section, set(out), key)
        out.update(section)
    return out


# -- typed sections ----------------------------------------------------------


@dataclass(frozen=True)
class CurveSpec:
    center: Tuple[float, float]
    radius: float
    cos: Tuple[float, ...] = ()
    sin: Tuple[float, ...] = ()

    def to_curve(self, **kw) -> BoundaryCurve:
        return BoundaryCurve(self.center, self.radius, self.cos, self.sin, **kw)


@dataclass(frozen=True)
class FrontSpec:
    curve: Union[int, str]  # obstacle index or "bounding"
    span: Tuple[float, float]
    flight: float
    samples: int
    times: Tuple[float, ...]
    eps: float
    reflect: bool


@dataclass(frozen=True)
class ItinerarySpec:
    x: float
    theta: float


@dataclass(frozen=True)
class GradcheckSpec:
    limit: int
    h: float


@dataclass(frozen=True)
class ConjugacySpec:
    pairs: int
    boundary_pairs: int
    t_min: float
    t_max: float
    margin: float
    boundary_flight: float


@dataclass(frozen=True)
class UniquenessSpec:
    epsilons: Tuple[float, ...]
    harmonic: int
    obstacle: int


@dataclass(frozen=True)
class VerifySpec:
    samples: int
    grid: Tuple[int, int]
    gradcheck: int
    triples: int


def _parse_curve(data, path: str) -> CurveSpec:
    data = _as_mapping(data, path)
    _check_keys(data, {"center", "radius", "cos", "sin"}, path)
    if "center" not in data:
        _fail(f"{path}.center", "required field is missing")
    if "radius" not in data:
        _fail(f"{path}.radius", "required field is missing")
    radius = _as_float(data["radius"], f"{path}.radius")
    if radius <= 0.0:
        _fail(f"{path}.radius", f"must be positive, got {radius:g}")
    return CurveSpec(
        center=_as_pair(data["center"], f"{path}.center"),
        radius=radius,
        cos=_as_floats(data.get("cos", ()), f"{path}.cos"),
        sin=_as_floats(data.get("sin", ()), f"{path}.sin"),
    )


def _parse_front(section: Optional[dict]) -> Optional[FrontSpec]:
    if section is None:
        return None
    _check_keys(
        section,
        {"curve", "span", "flight", "samples", "times", "eps", "reflect"},
        "front",
    )
    for key in ("curve", "span", "flight"):
        if key not in section:
            _fail(f"front.{key}", "required field is missing")
    curve = section["curve"]
    if curve != "bounding":
        curve = _as_int(curve, "front.curve")
    d = DEFAULTS["front"]
    return FrontSpec(
        curve=curve,
        span=_as_pair(section["span"], "front.span"),
        flight=_as_float(section["flight"], "front.flight"),
        samples=_as_int(section.get("samples", d["samples"]), "front.samples"),
        times=_as_floats(section.get("times", d["times"]), "front.times"),
        eps=_as_float(section.get("eps", d["eps"]), "front.eps"),
        reflect=_as_bool(section.get("reflect", d["reflect"]), "front.reflect"),
    )


@dataclass(frozen=True)
class Scenario:
    """Validated scenario; :func:`build_scene` turns it into a Scene."""

    name: str
    phi: str
    chart_radius: Optional[float]
    bounding: CurveSpec
    obstacles: Tuple[CurveSpec, ...]
    rtol: float
    atol: float
    tangency: float
    max_time: float
    max_reflections: int
    grid: Tuple[int, int]
    delta: float
    seed: int
    out: str
    front: Optional[FrontSpec]
    itinerary: ItinerarySpec
    gradcheck: GradcheckSpec
    conjugacy: ConjugacySpec
    uniqueness: UniquenessSpec
    verify: VerifySpec

    def with_overrides(
        self,
        out: Optional[str] = None,
        grid: Optional[Tuple[int, int]] = None,
        max_time: Optional[float] = None,
        max_reflections: Optional[int] = None,
        rtol: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> "Scenario":
        """Apply command-line overrides; --tol sets rtol and atol = rtol/10."""
        kw = {}
        if out is not None:
            kw["out"] = str(out)
        if grid is not None:
            kw["grid"] = _as_grid(grid, "grid")
        if max_time is not None:
            kw["max_time"] = float(max_time)
        if max_reflections is not None:
            kw["max_reflections"] = int(max_reflections)
        if rtol is not None:
            kw["rtol"] = float(rtol)
            kw["atol"] = float(rtol) / 10.0
        if seed is not None:
            kw["seed"] = int(seed)
        return replace(self, **kw) if kw else self


_TOP_KEYS = {
    "name", "metric", "bounding", "obstacles", "tolerances", "caps", "grid",
    "delta", "seed", "out", "front", "itinerary", "gradcheck", "conjugacy",
    "uniqueness", "verify",
}


def scenario_from_mapping(data, name: str = "scenario") -> Scenario:
    """Validate a parsed YAML mapping into a Scenario."""
    data = _as_mapping(data, "scenario")
    _check_keys(data, _TOP_KEYS, "")

    metric = _section(data, "metric", required=True)
    _check_keys(metric, {"phi", "chart_radius"}, "metric")
    if "phi" not in metric:
        _fail("metric.phi", "required field is missing")
    phi = _as_str(metric["phi"], "metric.phi")
    chart_radius = metric.get("chart_radius")
    if chart_radius is not None:
        chart_radius = _as_float(chart_radius, "metric.chart_radius")

    if "bounding" not in data:
        _fail("bounding", "required section is missing")
    bounding = _parse_curve(data["bounding"], "bounding")
    if chart_radius is not None:
        reach = max(abs(c) for c in bounding.center) + bounding.radius + sum(
            abs(a) for a in bounding.cos + bounding.sin
        )
        if reach >= chart_radius:
            _fail(
                "bounding.radius",
                f"curve reaches {reach:g}, outside the declared chart radius "
                f"{chart_radius:g}",
            )

    raw_obstacles = data.get("obstacles", [])
    if not isinstance(raw_obstacles, (list, tuple)):
        _fail("obstacles", f"expected a list, got {raw_obstacles!r}")
    obstacles = tuple(
        _parse_curve(o, f"obstacles[{i}]") for i, o in enumerate(raw_obstacles)
    )

    tol = _merged(_section(data, "tolerances"), "tolerances")
    caps = _merged(_section(data, "caps"), "caps")
    iti = _merged(_section(data, "itinerary"), "itinerary")
    gch = _merged(_section(data, "gradcheck"), "gradcheck")
    cnj = _merged(_section(data, "conjugacy"), "conjugacy")
    unq = _merged(_section(data, "uniqueness"), "uniqueness")
    ver = _merged(_section(data, "verify"), "verify")

    return Scenario(
        name=_as_str(data.get("name", name), "name"),
        phi=phi,
        chart_radius=chart_radius,
        bounding=bounding,
        obstacles=obstacles,
        rtol=_as_float(tol["rtol"], "tolerances.rtol"),
        atol=_as_float(tol["atol"], "tolerances.atol"),
        tangency=_as_float(tol["tangency"], "tolerances.tangency"),
        max_time=_as_float(caps["max_time"], "caps.max_time"),
        max_reflections=_as_int(caps["max_reflections"], "caps.max_reflections"),
        grid=_as_grid(data.get("grid", list(DEFAULTS["grid"])), "grid"),
        delta=_as_float(data.get("delta", DEFAULTS["delta"]), "delta"),
        seed=_as_int(data.get("seed", DEFAULTS["seed"]), "seed"),
        out=_as_str(data.get("out", DEFAULTS["out"]), "out"),
        front=_parse_front(_section(data, "front")),
        itinerary=ItinerarySpec(
            x=_as_float(iti["x"], "itinerary.x"),
            theta=_as_float(iti["theta"], "itinerary.theta"),
        ),
        gradcheck=GradcheckSpec(
            limit=_as_int(gch["limit"], "gradcheck.limit"),
            h=_as_float(gch["h"], "gradcheck.h"),
        ),
        conjugacy=ConjugacySpec(
            pairs=_as_int(cnj["pairs"], "conjugacy.pairs"),
            boundary_pairs=_as_int(cnj["boundary_pairs"], "conjugacy.boundary_pairs"),
            t_min=_as_float(cnj["t_min"], "conjugacy.t_min"),
            t_max=_as_float(cnj["t_max"], "conjugacy.t_max"),
            margin=_as_float(cnj["margin"], "conjugacy.margin"),
            boundary_flight=_as_float(
                cnj["boundary_flight"], "conjugacy.boundary_flight"
            ),
        ),
        uniqueness=UniquenessSpec(
            epsilons=_as_floats(unq["epsilons"], "uniqueness.epsilons"),
            harmonic=_as_int(unq["harmonic"], "uniqueness.harmonic"),
            obstacle=_as_int(unq["obstacle"], "uniqueness.obstacle"),
        ),
        verify=VerifySpec(
            samples=_as_int(ver["samples"], "verify.samples"),
            grid=_as_grid(ver["grid"], "verify.grid"),
            gradcheck=_as_int(ver["gradcheck"], "verify.gradcheck"),
            triples=_as_int(ver["triples"], "verify.triples"),
        ),
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise ScenarioError(f"{path.name}: not valid YAML ({err})") from None
    return scenario_from_mapping(data, name=path.stem)


def build_scene(scenario: Scenario) -> Scene:
    """Compile the chart and assemble the validated Scene."""
    try:
        chart = MetricChart.from_expression(scenario.phi)
    except ExprError as err:
        raise ScenarioError(f"metric.phi: {err}") from None
    return Scene(
        chart,
        scenario.bounding.to_curve(),
        [o.to_curve() for o in scenario.obstacles],
        tangency=scenario.tangency,
        seed=scenario.seed,
        rtol=scenario.rtol,
        atol=scenario.atol,
    )
