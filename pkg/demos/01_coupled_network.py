"""Build a coupled road / feeder network and reduce it to a metric graph.

Walks through the network layer: ingest a small road grid, snap feeder
buses onto it, knock out a couple of road segments, and compare shortest
paths before and after.

Run from the repository root:  python3 demos/01_coupled_network.py
"""

import numpy as np

from gridrestore import (
    PowerNode,
    apply_road_failures,
    build_coupled_network,
    load_road_network,
    shortest_path_matrix,
)

# a 6x6 road grid around (32.90, -97.00); block edges are ~500 m
N = 6
SPACING_DEG = 0.005
nodes = []
edges = []
for r in range(N):
    for c in range(N):
        nodes.append((f"r{r}c{c}", 32.90 + r * SPACING_DEG, -97.00 + c * SPACING_DEG))
for r in range(N):
    for c in range(N):
        if c + 1 < N:
            edges.append((f"r{r}c{c}", f"r{r}c{c+1}", 556.0))
        if r + 1 < N:
            edges.append((f"r{r}c{c}", f"r{r+1}c{c}", 556.0))

road = load_road_network(nodes, edges)
print(f"road graph: {road.n_nodes} nodes, {road.n_edges} edges")

# feeder buses live in a local frame; offsets translate (x, y) -> (lon, lat)
rng = np.random.default_rng(1)
buses = [
    PowerNode(
        bus_id=f"bus{i}",
        local_x=float(rng.uniform(0.0, (N - 1) * SPACING_DEG)),
        local_y=float(rng.uniform(0.0, (N - 1) * SPACING_DEG)),
        downstream_load_kw=float(rng.uniform(5.0, 300.0)),
        component_kind=str(rng.choice(["line", "switch", "transformer"])),
    )
    for i in range(8)
]
net = build_coupled_network(
    road, buses, offset_x=-97.00, offset_y=32.90,
    depots=["r0c0", "r5c5"], damaged=["r2c2", "r3c4"],
)
print("bus -> road node snapping:")
for bus, node in sorted(net.power_to_road.items()):
    print(f"  {bus:>5} -> {node}  ({net.loads_kw[node]:.1f} kW at that node)")

# metric reduction over depots + damaged nodes
terminals = net.terminals()
complete = shortest_path_matrix(road, terminals)
print(f"\nmetric closure over {terminals}:")
print(np.array_str(complete.dist, precision=0))

# knock out the two road segments south of r2c2 and redo the closure
failed = [("r2c2", "r2c3"), ("r2c2", "r3c2")]
broken = apply_road_failures(road, failed)
after = shortest_path_matrix(broken, terminals)
print(f"\nafter failing {failed}:")
print(np.array_str(after.dist, precision=0))
print("\ndetour r0c0 -> r2c2:", " ".join(after.path("r0c0", "r2c2")))
