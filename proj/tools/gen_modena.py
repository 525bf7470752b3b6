#!/usr/bin/env python3
"""Deterministic generator for the Modena-scale benchmark network.

Produces a 268-junction, 317-pipe, 4-reservoir network with a 24 h diurnal
demand pattern. Each reservoir feeds its own sector (55/25/12/8 % of demand)
through a header junction, so a pressure control valve on a feed or trunk
main sectorizes that zone. Sectors are gridded with loops added inside each
sector, and thin tie mains keep the network connected across sectors.
Diameters are sized from tree-flow estimates so that roughly 60 % of pipe
length runs above the 0.2 m/s self-cleaning threshold at mean demand.

Usage: python3 tools/gen_modena.py data/modena.inp
"""

import math
import random
import sys

SEED = 20240817
TOTAL_DEMAND_LPS = 400.0
RESERVOIR_HEAD = 64.5
ELEV_BASE = 31.0
ELEV_SLOPE = 0.0005     # m per m of distance from the sector header
ELEV_NOISE = 0.4
SPACING = 150.0         # m, grid pitch
HW_C = 130.0
P_ABOVE = 0.45          # share of small periphery pipes sized above threshold
P_MID = 0.60            # share of mid-tier pipes sized above threshold

PATTERN = [0.62, 0.60, 0.58, 0.60, 0.64, 0.74, 0.92, 1.18, 1.32, 1.28, 1.22,
           1.18, 1.15, 1.12, 1.10, 1.08, 1.12, 1.20, 1.28, 1.24, 1.10, 0.92,
           0.78, 0.68]

STD_DIAM_MM = [63, 80, 100, 125, 150, 200, 250, 300, 350, 400, 500, 600]

SECTORS = [
    # (name, grid cols, grid rows, drop count, demand share, chords)
    ("A", 20, 8, 15, 0.55, 25),
    ("B", 10, 7, 4, 0.25, 11),
    ("C", 6, 6, 4, 0.12, 6),
    ("D", 4, 6, 3, 0.08, 3),
]

# sector placement: (header x, header y, grid direction)
SECTOR_ORIGIN = {"A": (400.0, -1800.0), "B": (400.0, 1800.0),
                 "C": (-400.0, 1800.0), "D": (-400.0, -1800.0)}
SECTOR_DIR = {"A": 1.0, "B": 1.0, "C": -1.0, "D": -1.0}

# thin tie mains between adjacent sectors: kept long and small so they carry
# negligible flow and do not defeat per-sector pressure control
TIES = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")]
TIE_DIAM_MM = 80
TIE_LENGTH = 400.0


def snap_diameter(d_mm):
    for s in STD_DIAM_MM:
        if d_mm <= s:
            return s
    return STD_DIAM_MM[-1]


def main(out_path):
    rng = random.Random(SEED)
    mean_mult = sum(PATTERN) / len(PATTERN)

    junctions = []  # ids in insertion order
    pipes = []      # (id, from, to, length, diam_mm)
    pos = {}

    def add_junction(jid, x, y):
        junctions.append(jid)
        pos[jid] = (x, y)

    tree_edges = []
    chord_edges = []
    entries = {}
    headers = {}
    grids = {}
    pipe_no = 0

    def pipe_id():
        nonlocal pipe_no
        pipe_no += 1
        return f"P{pipe_no}"

    for name, cols, rows, drops, _share, _chords in SECTORS:
        ox, oy = SECTOR_ORIGIN[name]
        sx = SECTOR_DIR[name]
        hid = f"H{name}"
        add_junction(hid, ox - sx * 200.0, oy)
        headers[name] = hid

        grid = {}
        count = cols * rows - drops
        k = 0
        for c in range(cols):
            for r in range(rows):
                if k >= count:
                    break
                jid = f"{name}{k + 1}"
                x = ox + sx * c * SPACING + rng.uniform(-20, 20)
                y = oy + (r - rows / 2.0) * SPACING + rng.uniform(-20, 20)
                add_junction(jid, x, y)
                grid[(c, r)] = jid
                k += 1
        grids[name] = grid
        entries[name] = grid[(0, rows // 2)]

        # candidate edges between grid neighbours
        candidates = []
        for (c, r), jid in grid.items():
            for dc, dr in ((1, 0), (0, 1)):
                other = grid.get((c + dc, r + dr))
                if other:
                    dx = pos[jid][0] - pos[other][0]
                    dy = pos[jid][1] - pos[other][1]
                    candidates.append((jid, other, math.hypot(dx, dy)))
        rng.shuffle(candidates)

        # spanning tree within the sector
        parent = {jid: jid for jid in grid.values()}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        rest = []
        for a, b, length in candidates:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
                tree_edges.append((a, b, length))
            else:
                rest.append((a, b, length))
        chord_edges.append((name, rest))

    # shortest leftover neighbour edges become in-sector loops
    chords = []
    chord_counts = {name: n for name, *_rest, n in SECTORS}
    for name, rest in chord_edges:
        rest.sort(key=lambda e: e[2])
        chords.extend(rest[: chord_counts[name]])

    # demands: lognormal weights scaled to the sector share (headers carry none)
    demand = {jid: 0.0 for jid in junctions}
    for name, cols, rows, drops, share, _chords in SECTORS:
        ids = sorted(grids[name].values(), key=lambda j: int(j[1:]))
        weights = [rng.lognormvariate(0.0, 0.55) for _ in ids]
        total = sum(weights)
        for jid, w in zip(ids, weights):
            demand[jid] = TOTAL_DEMAND_LPS * share * w / total

    # route demand along the tree to estimate pipe flows
    tree_adj = {jid: [] for jid in junctions}
    for a, b, _length in tree_edges:
        tree_adj[a].append(b)
        tree_adj[b].append(a)
    for name, *_ in SECTORS:
        tree_adj[entries[name]].append(headers[name])
        tree_adj[headers[name]].append(entries[name])

    parent_of = {}
    order = []
    seen = set()
    for name, *_ in SECTORS:
        hid = headers[name]
        parent_of[hid] = None
        order.append(hid)
        seen.add(hid)
    for jid in order:
        for other in tree_adj[jid]:
            if other not in seen:
                seen.add(other)
                parent_of[other] = jid
                order.append(other)
    subtree_flow = dict(demand)
    for jid in reversed(order):
        p = parent_of[jid]
        if p is not None:
            subtree_flow[p] = subtree_flow.get(p, 0.0) + subtree_flow[jid]

    def size_for(flow_lps, u_target):
        q = max(flow_lps, 0.05) / 1000.0
        d = math.sqrt(4.0 * q / (math.pi * u_target))
        return snap_diameter(d * 1000.0)

    def target_velocity(flow_lps):
        if flow_lps > 20.0:
            return 0.75
        if flow_lps > 5.0:
            return 0.50
        if flow_lps > 1.5:
            return 0.32 if rng.random() < P_MID else 0.17
        return 0.26 if rng.random() < P_ABOVE else 0.13

    for a, b, length in tree_edges:
        child = a if parent_of.get(a) == b else b
        flow = subtree_flow[child]
        pipes.append((pipe_id(), a, b, length, size_for(flow, target_velocity(flow))))
    for a, b, length in chords:
        pipes.append((pipe_id(), a, b, length, size_for(0.8, 0.13)))

    # ties between sectors: far corner of one grid to far corner of the next
    def far_node(name):
        grid = grids[name]
        return grid[max(grid.keys())]

    for a, b in TIES:
        pipes.append((pipe_id(), far_node(a), far_node(b), TIE_LENGTH, TIE_DIAM_MM))

    # trunk mains and reservoir feeds, one per sector
    reservoirs = []
    for name, cols, rows, drops, share, _chords in SECTORS:
        flow = TOTAL_DEMAND_LPS * share
        pipes.append((pipe_id(), headers[name], entries[name], 400.0,
                      size_for(flow, 0.75)))
        rid = f"R{len(reservoirs) + 1}"
        reservoirs.append(rid)
        pipes.append((pipe_id(), rid, headers[name], 60.0, size_for(flow, 0.75)))

    # elevations rise away from each sector's header
    elevation = {}
    for name, *_ in SECTORS:
        hx, hy = pos[headers[name]]
        members = [headers[name]] + sorted(grids[name].values(), key=lambda j: int(j[1:]))
        for jid in members:
            x, y = pos[jid]
            d = math.hypot(x - hx, y - hy)
            elevation[jid] = ELEV_BASE + ELEV_SLOPE * d + rng.gauss(0.0, ELEV_NOISE)

    lines = ["[OPTIONS]", "UNITS LPS", "", "[TIMES]", "DURATION 24:00",
             "HYDRAULIC TIMESTEP 1:00", "", "[PATTERNS]"]
    for k in range(0, len(PATTERN), 6):
        lines.append("diurnal " + " ".join(f"{m / mean_mult:.4f}" for m in PATTERN[k:k + 6]))
    lines += ["", "[JUNCTIONS]", ";id elevation_m demand_lps pattern"]
    for jid in junctions:
        lines.append(f"{jid} {elevation[jid]:.2f} {demand[jid]:.4f} diurnal")
    lines += ["", "[RESERVOIRS]", ";id head_m"]
    for rid in reservoirs:
        lines.append(f"{rid} {RESERVOIR_HEAD:.2f}")
    lines += ["", "[PIPES]", ";id from to length_m diameter_mm hw_c"]
    for pid, a, b, length, diam in pipes:
        lines.append(f"{pid} {a} {b} {length:.1f} {diam} {HW_C:.0f}")
    lines.append("")

    with open(out_path, "w") as f:
        f.write("\n".join(lines))
    n_j, n_p = len(junctions), len(pipes)
    print(f"wrote {out_path}: {n_j} junctions, {n_p} pipes, {len(reservoirs)} reservoirs, "
          f"{n_p - n_j} loops")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/modena.inp")
