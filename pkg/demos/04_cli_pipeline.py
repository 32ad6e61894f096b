"""The same workflow through the file-based CLI, stage by stage.

Generates input CSVs, then drives build-network / gen-scenarios / solve /
schedule exactly as you would from a shell. Every artifact is versioned
JSON or CSV; re-running with the same seed reproduces identical bytes.

Run from the repository root:  python3 demos/04_cli_pipeline.py
Inputs and artifacts land in demo_output/cli/.
"""

import random
from pathlib import Path

from gridrestore.cli import main

ROOT = Path("demo_output/cli")
OUT = ROOT / "run"
ROOT.mkdir(parents=True, exist_ok=True)

# --- input files ---------------------------------------------------------------

rnd = random.Random(13)
N = 6
nodes = ["node_id,lat,lon"]
edges = ["u,v,length_m"]
for r in range(N):
    for c in range(N):
        nodes.append(f"r{r}c{c},{32.90 + r * 0.005},{-97.00 + c * 0.005}")
for r in range(N):
    for c in range(N):
        if c + 1 < N:
            edges.append(f"r{r}c{c},r{r}c{c+1},556.0")
        if r + 1 < N:
            edges.append(f"r{r}c{c},r{r+1}c{c},556.0")
(ROOT / "road_nodes.csv").write_text("\n".join(nodes) + "\n")
(ROOT / "road_edges.csv").write_text("\n".join(edges) + "\n")

power = ["bus_id,x,y,downstream_load_kw,kind"]
for i in range(14):
    power.append(
        f"bus{i},{rnd.uniform(0, 0.025):.6f},{rnd.uniform(0, 0.025):.6f},"
        f"{rnd.uniform(10, 350):.1f},{rnd.choice(['line', 'switch', 'transformer'])}"
    )
(ROOT / "power.csv").write_text("\n".join(power) + "\n")

(ROOT / "events.csv").write_text(
    "ef,start_lat,start_lon,end_lat,end_lon,width_m\n"
    "2,32.904,-97.001,32.922,-96.978,1000\n"
)

# --- the pipeline ----------------------------------------------------------------

common = ["--out-dir", str(OUT), "--seed", "7"]
steps = [
    common + [
        "build-network",
        "--road-nodes", str(ROOT / "road_nodes.csv"),
        "--road-edges", str(ROOT / "road_edges.csv"),
        "--power", str(ROOT / "power.csv"),
        "--offset-x", "-97.0", "--offset-y", "32.9",
        "--depots", "r0c0,r5c5",
    ],
    common + [
        "gen-scenarios",
        "--network", str(OUT / "network.json"),
        "--events", str(ROOT / "events.csv"),
    ],
    common + [
        "solve",
        "--network", str(OUT / "network.json"),
        "--scenarios", str(OUT / "scenarios.json"),
    ],
    common + [
        "schedule",
        "--network", str(OUT / "network.json"),
        "--scenarios", str(OUT / "scenarios.json"),
    ],
]
for argv in steps:
    print(f"\n$ gridrestore {' '.join(argv)}")
    code = main(argv)
    if code != 0:
        raise SystemExit(code)

print(f"\nall artifacts in {OUT}/ (see run_manifest.json for digests)")
