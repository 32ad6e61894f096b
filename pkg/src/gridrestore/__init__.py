"""gridrestore: post-disaster power grid restoration planning.

A two-stage stochastic planning toolkit over coupled power and road
networks: scenario sampling, exact crew-capacity allocation, exact
per-scenario multi-crew routing over a metric reduction of the road graph,
and precedence-respecting repair schedules rendered as Gantt charts.
"""

from .allocation import (
    CrewAllocation,
    Stage1Instance,
    default_scale_c,
    enumerate_stage1,
    marginal_gain,
    solve_stage1,
    stage1_objective,
    verify_allocation,
)
from .network import (
    CompleteGraph,
    CoupledNetwork,
    PowerNode,
    RoadGraph,
    apply_road_failures,
    build_coupled_network,
    load_road_network,
    project_power_nodes,
    shortest_path_matrix,
)
from .routing import (
    Route,
    RoutePlan,
    RoutingInstance,
    ValidationReport,
    brute_force_routing,
    expected_cost,
    route_cost,
    solve_routing,
    validate_routes,
)
from .scenario import (
    CrewType,
    Scenario,
    ScenarioConfig,
    ScenarioSet,
    TornadoEvent,
    default_crews,
    generate_scenarios,
    sample_repair_demand,
    sample_repair_time,
    scenario_stream,
    select_damage,
)
from .schedule import (
    GanttChart,
    GanttEntry,
    build_schedule,
    combine_charts,
    makespan,
)

__version__ = "0.1.0"

__all__ = [
    "CompleteGraph",
    "CoupledNetwork",
    "CrewAllocation",
    "CrewType",
    "GanttChart",
    "GanttEntry",
    "PowerNode",
    "RoadGraph",
    "Route",
    "RoutePlan",
    "RoutingInstance",
    "Scenario",
    "ScenarioConfig",
    "ScenarioSet",
    "Stage1Instance",
    "TornadoEvent",
    "ValidationReport",
    "apply_road_failures",
    "brute_force_routing",
    "build_coupled_network",
    "build_schedule",
    "combine_charts",
    "default_crews",
    "default_scale_c",
    "enumerate_stage1",
    "expected_cost",
    "generate_scenarios",
    "load_road_network",
    "makespan",
    "marginal_gain",
    "project_power_nodes",
    "route_cost",
    "sample_repair_demand",
    "sample_repair_time",
    "scenario_stream",
    "select_damage",
    "shortest_path_matrix",
    "solve_routing",
    "solve_stage1",
    "stage1_objective",
    "validate_routes",
    "verify_allocation",
]
