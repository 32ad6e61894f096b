"""Versioned on-disk artifacts and CSV ingestion.

JSON artifacts are written with sorted keys and no timestamps, so identical
inputs produce byte-identical files. Maps keyed by node ids are stored as
sorted [id, value] pair lists, which keeps JSON round-trips type-faithful
(integer ids stay integers). Distances are serialized as fixed-point meter
strings with 3 decimals, matching the millimeter quantization used for all
shortest-path arithmetic.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import SchemaError
from .network import (
    CoupledNetwork,
    NodeId,
    PowerNode,
    RoadGraph,
    edge_key,
    node_key,
)
from .routing import Route, RoutePlan
from .scenario import (
    N_CREWS,
    CrewType,
    Scenario,
    ScenarioSet,
    TornadoEvent,
)
from .schedule import GanttChart, GanttEntry

SCHEMA_NETWORK = "coupled_network/1"
SCHEMA_SCENARIOS = "scenario_set/1"
SCHEMA_ALLOCATION = "crew_allocation/1"
SCHEMA_ROUTES = "route_plan/1"
SCHEMA_ROAD = "road_graph/1"
SCHEMA_CONFIG = "config/1"
SCHEMA_MANIFEST = "run_manifest/1"

GANTT_HEADER = ("scenario", "node", "crew", "start_h", "finish_h")


# --- primitives -----------------------------------------------------------


def meters_str(length_m: float) -> str:
    """Fixed-point meters with 3 decimals, computed from exact millimeters."""
    mm = int(round(float(length_m) * 1000.0))
    sign = "-" if mm < 0 else ""
    mm = abs(mm)
    return f"{sign}{mm // 1000}.{mm % 1000:03d}"


def parse_meters(text: str, where: str = "") -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: bad distance {text!r}") from None
    return value


def write_json_artifact(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_json_artifact(path: str | Path, expected_schema: str) -> dict:
    p = Path(path)
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"{p}: file not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or obj.get("schema") != expected_schema:
        raise SchemaError(
            f"{p}: expected schema {expected_schema!r}, got {obj.get('schema')!r}"
        )
    return obj


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _pairs(mapping: Mapping[NodeId, object]) -> list[list]:
    return [[i, mapping[i]] for i in sorted(mapping, key=node_key)]


def _ids(ids: Iterable[NodeId]) -> list[NodeId]:
    return sorted(ids, key=node_key)


# --- CSV ingestion ---------------------------------------------------------


def _read_csv(path: str | Path, header: Sequence[str]):
    """Yield (line_number, row_dict); enforce the exact expected header."""
    p = Path(path)
    try:
        fh = open(p, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError(f"{p}: file not found") from None
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaError(f"{p}:1: empty file, expected header {','.join(header)}") from None
        if [h.strip() for h in first] != list(header):
            raise SchemaError(
                f"{p}:1: expected header {','.join(header)!r}, got {','.join(first)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{p}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, dict(zip(header, (cell.strip() for cell in row)))


def _float_field(row: dict, key: str, path, lineno: int) -> float:
    try:
        return float(row[key])
    except ValueError:
        raise SchemaError(f"{path}:{lineno}: bad {key} value {row[key]!r}") from None


def _int_field(row: dict, key: str, path, lineno: int) -> int:
    try:
        return int(row[key])
    except ValueError:
        raise SchemaError(f"{path}:{lineno}: bad {key} value {row[key]!r}") from None


def read_road_nodes_csv(path: str | Path) -> list[tuple[NodeId, float, float]]:
    rows = []
    for lineno, row in _read_csv(path, ("node_id", "lat", "lon")):
        rows.append(
            (row["node_id"], _float_field(row, "lat", path, lineno),
             _float_field(row, "lon", path, lineno))
        )
    return rows


def read_road_edges_csv(path: str | Path) -> list[tuple[NodeId, NodeId, float]]:
    rows = []
    for lineno, row in _read_csv(path, ("u", "v", "length_m")):
        rows.append((row["u"], row["v"], _float_field(row, "length_m", path, lineno)))
    return rows


def read_road_graph_json(path: str | Path) -> RoadGraph:
    """Single structured road file holding both tables."""
    obj = read_json_artifact(path, SCHEMA_ROAD)
    nodes = [(n, float(lat), float(lon)) for n, lat, lon in obj["nodes"]]
    edges = [(u, v, parse_meters(m, str(path))) for u, v, m in obj["edges"]]
    return RoadGraph(tuple(nodes), tuple(edges))


def write_road_graph_json(road: RoadGraph, path: str | Path) -> None:
    write_json_artifact(
        path,
        {
            "schema": SCHEMA_ROAD,
            "nodes": [[n, lat, lon] for n, lat, lon in road.nodes],
            "edges": [[u, v, meters_str(m)] for u, v, m in road.edges],
        },
    )


def read_power_nodes_csv(path: str | Path) -> list[PowerNode]:
    out = []
    for lineno, row in _read_csv(path, ("bus_id", "x", "y", "downstream_load_kw", "kind")):
        try:
            out.append(
                PowerNode(
                    bus_id=row["bus_id"],
                    local_x=_float_field(row, "x", path, lineno),
                    local_y=_float_field(row, "y", path, lineno),
                    downstream_load_kw=_float_field(row, "downstream_load_kw", path, lineno),
                    component_kind=row["kind"],
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return out


def read_power_edges_csv(path: str | Path) -> list[tuple[NodeId, NodeId]]:
    return [(row["bus_u"], row["bus_v"]) for _, row in _read_csv(path, ("bus_u", "bus_v"))]


def read_events_csv(
    path: str | Path, default_width_m: float | None = None
) -> list[TornadoEvent]:
    out = []
    header = ("ef", "start_lat", "start_lon", "end_lat", "end_lon", "width_m")
    for lineno, row in _read_csv(path, header):
        width_text = row["width_m"]
        if not width_text and default_width_m is not None:
            width = float(default_width_m)
        else:
            width = _float_field(row, "width_m", path, lineno)
        try:
            out.append(
                TornadoEvent(
                    ef_rating=_int_field(row, "ef", path, lineno),
                    path_start=(
                        _float_field(row, "start_lat", path, lineno),
                        _float_field(row, "start_lon", path, lineno),
                    ),
                    path_end=(
                        _float_field(row, "end_lat", path, lineno),
                        _float_field(row, "end_lon", path, lineno),
                    ),
                    corridor_width_m=width,
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return out


# --- coupled network artifact ----------------------------------------------


def write_network_file(net: CoupledNetwork, path: str | Path) -> None:
    write_json_artifact(
        path,
        {
            "schema": SCHEMA_NETWORK,
            "road": {
                "nodes": [[n, lat, lon] for n, lat, lon in net.road.nodes],
                "edges": [[u, v, meters_str(m)] for u, v, m in net.road.edges],
            },
            "power_to_road": _pairs(net.power_to_road),
            "depots": _ids(net.depots),
            "damaged": _ids(net.damaged),
            "loads_kw": _pairs(net.loads_kw),
        },
    )


def read_network_file(path: str | Path) -> CoupledNetwork:
    obj = read_json_artifact(path, SCHEMA_NETWORK)
    road = RoadGraph(
        tuple((n, float(lat), float(lon)) for n, lat, lon in obj["road"]["nodes"]),
        tuple((u, v, parse_meters(m, str(path))) for u, v, m in obj["road"]["edges"]),
    )
    return CoupledNetwork(
        road=road,
        power_to_road={bus: node for bus, node in obj["power_to_road"]},
        depots=frozenset(obj["depots"]),
        damaged=frozenset(obj["damaged"]),
        loads_kw={node: float(kw) for node, kw in obj["loads_kw"]},
    )


# --- scenario set artifact ---------------------------------------------------


def write_scenario_file(sset: ScenarioSet, path: str | Path) -> None:
    scenarios = []
    for sc in sset.scenarios:
        nodes = sorted({i for i, _ in sc.repair_time_h}, key=node_key)
        scenarios.append(
            {
                "id": sc.scenario_id,
                "repair_time_h": [
                    [i, [sc.repair_time_h[(i, k)] for k in range(N_CREWS)]] for i in nodes
                ],
                "repair_demand": [
                    [i, [sc.repair_demand[(i, k)] for k in range(N_CREWS)]] for i in nodes
                ],
                "failed_edges": [
                    list(e)
                    for e in sorted(sc.failed_edges, key=lambda e: (node_key(e[0]), node_key(e[1])))
                ],
            }
        )
    write_json_artifact(
        path,
        {
            "schema": SCHEMA_SCENARIOS,
            "seed": sset.seed,
            "config": dict(sset.config) if sset.config is not None else None,
            "damaged": _ids(sset.damaged),
            "crews": [
                {
                    "index": c.index,
                    "name": c.name,
                    "hourly_cost_per_person": c.hourly_cost_per_person,
                }
                for c in sset.crews
            ],
            "loads_kw": _pairs(sset.loads_kw) if sset.loads_kw is not None else None,
            "scenarios": scenarios,
        },
    )


def read_scenario_file(path: str | Path) -> ScenarioSet:
    obj = read_json_artifact(path, SCHEMA_SCENARIOS)
    try:
        crews = tuple(
            CrewType(c["index"], c["name"], float(c["hourly_cost_per_person"]))
            for c in obj["crews"]
        )
        scenarios = []
        for rec in obj["scenarios"]:
            times = {}
            demands = {}
            for i, per_crew in rec["repair_time_h"]:
                for k, t in enumerate(per_crew):
                    times[(i, k)] = float(t)
            for i, per_crew in rec["repair_demand"]:
                for k, d in enumerate(per_crew):
                    demands[(i, k)] = int(d)
            failed = frozenset(edge_key(u, v) for u, v in rec["failed_edges"])
            scenarios.append(Scenario(int(rec["id"]), times, demands, failed))
        loads = obj.get("loads_kw")
        return ScenarioSet(
            scenarios=tuple(scenarios),
            seed=obj["seed"],
            damaged=frozenset(obj["damaged"]),
            crews=crews,
            config=obj.get("config"),
            loads_kw={i: float(kw) for i, kw in loads} if loads is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed scenario set ({exc})") from None


# --- allocation artifact -----------------------------------------------------


def write_allocation_file(
    alloc,
    path: str | Path,
    scale_c: float,
    gains: Mapping[int, float],
    crew_costs: Sequence[float],
) -> None:
    by_scenario: dict[int, dict[NodeId, list[float]]] = {}
    for (s, i, k), y in alloc.assignment.items():
        by_scenario.setdefault(s, {}).setdefault(i, [0.0] * N_CREWS)[k] = y
    assignment = [
        [s, [[i, by_scenario[s][i]] for i in sorted(by_scenario[s], key=node_key)]]
        for s in sorted(by_scenario)
    ]
    write_json_artifact(
        path,
        {
            "schema": SCHEMA_ALLOCATION,
            "capacity": list(alloc.capacity),
            "assignment": assignment,
            "objective_value": alloc.objective_value,
            "boundedness": {
                "scale_c": scale_c,
                "per_crew": [
                    {
                        "crew": k,
                        "marginal_gain": gains[k],
                        "weighted_cost": scale_c * crew_costs[k],
                    }
                    for k in range(N_CREWS)
                ],
            },
        },
    )


def read_allocation_file(path: str | Path):
    from .allocation import CrewAllocation

    obj = read_json_artifact(path, SCHEMA_ALLOCATION)
    assignment = {}
    for s, rows in obj["assignment"]:
        for i, per_crew in rows:
            for k, y in enumerate(per_crew):
                if y:
                    assignment[(int(s), i, k)] = float(y)
    return CrewAllocation(
        capacity=tuple(int(x) for x in obj["capacity"]),
        assignment=assignment,
        objective_value=float(obj["objective_value"]),
    )


# --- route plan artifact ------------------------------------------------------


def write_route_plan_file(plan: RoutePlan, path: str | Path, complete=None) -> None:
    """Route plan with per-leg costs; includes reconstructed road-level paths
    when the complete graph carries predecessor data."""
    routes = []
    for k in sorted(plan.routes):
        r = plan.routes[k]
        stops = r.stops()
        legs = []
        for (u, v), cost in zip(zip(stops, stops[1:]), r.leg_costs):
            leg = {"from": u, "to": v, "cost": cost}
            if complete is not None:
                leg["distance_m"] = meters_str(complete.dist_m(u, v))
                road_path = complete.path(u, v)
                leg["road_path"] = list(road_path) if road_path is not None else None
            legs.append(leg)
        routes.append(
            {
                "crew": k,
                "depot_start": r.depot_start,
                "depot_end": r.depot_end,
                "visit_order": list(r.visit_order),
                "leg_costs": list(r.leg_costs),
                "total_cost": r.total_cost,
                "mtz_labels": [[i, r.mtz_labels[i]] for i in sorted(r.mtz_labels, key=node_key)],
                "legs": legs,
            }
        )
    write_json_artifact(
        path,
        {
            "schema": SCHEMA_ROUTES,
            "scenario_id": plan.scenario_id,
            "routes": routes,
            "total_cost": plan.total_cost,
        },
    )


def read_route_plan_file(path: str | Path) -> RoutePlan:
    obj = read_json_artifact(path, SCHEMA_ROUTES)
    routes = {}
    for rec in obj["routes"]:
        routes[int(rec["crew"])] = Route(
            crew=int(rec["crew"]),
            depot_start=rec["depot_start"],
            depot_end=rec["depot_end"],
            visit_order=tuple(rec["visit_order"]),
            leg_costs=tuple(float(c) for c in rec["leg_costs"]),
            total_cost=float(rec["total_cost"]),
            mtz_labels={i: int(u) for i, u in rec["mtz_labels"]},
        )
    return RoutePlan(scenario_id=int(obj["scenario_id"]), routes=routes)


# --- gantt csv / svg ----------------------------------------------------------


def write_gantt_csv(chart: GanttChart, path: str | Path) -> None:
    lines = [",".join(GANTT_HEADER)]
    for e in chart.entries:
        lines.append(f"{e.scenario_id},{e.node_id},{e.crew},{e.start_h:.4f},{e.finish_h:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_gantt_csv(path: str | Path) -> GanttChart:
    entries = []
    for lineno, row in _read_csv(path, GANTT_HEADER):
        entries.append(
            GanttEntry(
                scenario_id=_int_field(row, "scenario", path, lineno),
                node_id=row["node"],
                crew=_int_field(row, "crew", path, lineno),
                start_h=_float_field(row, "start_h", path, lineno),
                finish_h=_float_field(row, "finish_h", path, lineno),
            )
        )
    return GanttChart.from_entries(entries)


_PALETTE = ("#e6194b", "#3c89d0", "#3cb44b", "#9334e6", "#f58231",
            "#46c8c8", "#d4a017", "#911eb4", "#800000", "#2f6f4f")


def _nice_step(span_h: float) -> float:
    """Grid step targeting at most ~12 tick lines."""
    for step in (0.5, 1, 2, 4, 6, 12, 24, 48, 96):
        if span_h / step <= 12:
            return float(step)
    return max(1.0, span_h / 12.0)


def write_gantt_svg(chart: GanttChart, path: str | Path, title: str = "Crew schedule") -> None:
    """Deterministic SVG rendering: one row per (node, crew), a bar per scenario."""
    rows = sorted({(e.node_id, e.crew) for e in chart.entries},
                  key=lambda t: (node_key(t[0]), t[1]))
    scenario_ids = sorted({e.scenario_id for e in chart.entries})
    row_index = {rc: i for i, rc in enumerate(rows)}
    lane_count = max(1, len(scenario_ids))

    ml, mr, mt, mb = 180.0, 24.0, 48.0, 34.0
    row_h = 22.0
    span = max(chart.makespan_h, 1e-9)
    plot_w = 760.0
    width = ml + plot_w + mr
    height = mt + row_h * max(1, len(rows)) + mb

    def x(t: float) -> float:
        return ml + (t / span) * plot_w

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="monospace" font-size="11">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{ml:.1f}" y="20" font-size="14">{title}</text>',
    ]
    step = _nice_step(span)
    t = 0.0
    while t <= span + 1e-9:
        xx = x(min(t, span))
        out.append(
            f'<line x1="{xx:.2f}" y1="{mt:.2f}" x2="{xx:.2f}" '
            f'y2="{height - mb:.2f}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{xx:.2f}" y="{height - mb + 14:.2f}" text-anchor="middle">{t:g}h</text>'
        )
        t += step
    for (node, crew), idx in row_index.items():
        y0 = mt + idx * row_h
        out.append(
            f'<text x="{ml - 8:.1f}" y="{y0 + row_h * 0.7:.2f}" '
            f'text-anchor="end">{node} crew{crew}</text>'
        )
    lane_h = (row_h - 6.0) / lane_count
    for e in chart.entries:
        idx = row_index[(e.node_id, e.crew)]
        lane = scenario_ids.index(e.scenario_id)
        y0 = mt + idx * row_h + 3.0 + lane * lane_h
        color = _PALETTE[e.scenario_id % len(_PALETTE)]
        bar_w = max(x(e.finish_h) - x(e.start_h), 0.5)
        out.append(
            f'<rect x="{x(e.start_h):.2f}" y="{y0:.2f}" width="{bar_w:.2f}" '
            f'height="{max(lane_h - 1.0, 1.0):.2f}" fill="{color}">'
            f'<title>s{e.scenario_id} {e.node_id} crew{e.crew}: '
            f'{e.start_h:.2f}-{e.finish_h:.2f}h</title></rect>'
        )
    for lane, sid in enumerate(scenario_ids):
        color = _PALETTE[sid % len(_PALETTE)]
        lx = ml + 110.0 * lane
        out.append(f'<rect x="{lx:.1f}" y="30" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{lx + 14:.1f}" y="39">scenario {sid}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
