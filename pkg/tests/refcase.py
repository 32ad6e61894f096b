"""Reference planning case: 4 damaged nodes, 4 crews, 3 scenarios.

Frozen repair times (hours), repair demands (persons), and restoration
loads (kW) with known optimal crew capacities; shared across the suite.
"""

from gridrestore import Scenario, ScenarioSet

NODES = (37215, 23214, 36856, 51201)

LOADS_KW = {37215: 213.6, 23214: 223.7, 36856: 287.6, 51201: 8.9}

# node -> crew -> (scenario 0, scenario 1, scenario 2)
REPAIR_TIME_H = {
    37215: ((5.5, 8.1, 5.7), (4.7, 1.4, 2.2), (1.6, 1.2, 2.9), (4.1, 3.3, 4.8)),
    23214: ((4.3, 6.4, 7.2), (8.9, 2.6, 1.8), (3.5, 4.5, 3.2), (5.5, 5.9, 5.2)),
    36856: ((5.4, 6.0, 5.8), (2.2, 1.8, 2.2), (5.2, 2.9, 1.1), (3.3, 4.4, 3.1)),
    51201: ((6.4, 8.2, 8.8), (3.1, 3.9, 2.1), (1.9, 2.2, 6.2), (5.5, 5.9, 3.8)),
}

REPAIR_DEMAND = {
    37215: ((17, 16, 8), (5, 6, 8), (6, 15, 12), (9, 18, 6)),
    23214: ((10, 8, 10), (7, 8, 19), (9, 13, 14), (8, 10, 10)),
    36856: ((5, 12, 7), (8, 18, 12), (14, 6, 14), (15, 10, 14)),
    51201: ((8, 14, 9), (13, 8, 5), (15, 6, 8), (12, 5, 8)),
}

N_SCENARIOS = 3


def scenario_set(failed_edges=None) -> ScenarioSet:
    """The fixture as a hand-authored scenario set (no sampling involved)."""
    failed_edges = failed_edges or [frozenset()] * N_SCENARIOS
    scenarios = []
    for s in range(N_SCENARIOS):
        times = {(i, k): REPAIR_TIME_H[i][k][s] for i in NODES for k in range(4)}
        demands = {(i, k): REPAIR_DEMAND[i][k][s] for i in NODES for k in range(4)}
        scenarios.append(Scenario(s, times, demands, frozenset(failed_edges[s])))
    return ScenarioSet(
        scenarios=tuple(scenarios),
        seed=None,
        damaged=frozenset(NODES),
        loads_kw=dict(LOADS_KW),
    )


def demand_column_sum(scenario: int, crew: int) -> int:
    """Independent spreadsheet-style column sum over the frozen table."""
    return sum(REPAIR_DEMAND[i][crew][scenario] for i in NODES)
