#!/usr/bin/env python3
"""Generate the perforated RVE fixtures (6-node triangles, JSON mesh format).

The 2x2 mm cell holds four identical holes bounded by closed uniform cubic
B-splines. One eighth of a hole cell (the wedge between the horizontal and
diagonal symmetry lines through the hole center) is meshed with Triangle and
then replicated with the D4 symmetry group and the four cell translations, so
the resulting mesh is exactly mirror symmetric about x = 0 and y = 0.

Usage:
    make_rve_mesh.py --h 0.06 --out fixtures/rve_parent.json
    make_rve_mesh.py --h 0.15 --out fixtures/rve_coarse.json
    make_rve_mesh.py --single --out fixtures/tri6_single.json
"""

import argparse
import json
import math

import numpy as np
import triangle


def control_points(zeta):
    z = zeta
    return np.array([
        (0.05 + z, 0.5),
        (0.125 - z, 0.125 - z),
        (0.5, 0.05 + z),
        (0.875 + z, 0.125 - z),
        (0.95 - z, 0.5),
        (0.875 + z, 0.875 + z),
        (0.5, 0.95 - z),
        (0.125 - z, 0.875 + z),
    ])


def spline(zeta, u):
    """Closed uniform cubic B-spline; u in [0, 8), S(k) = (P[k-1] + 4 P[k] + P[k+1]) / 6."""
    p = control_points(zeta)
    u = u % 8.0
    j = int(math.floor(u))
    s = u - j
    b = [(1 - s) ** 3 / 6.0,
         (3 * s ** 3 - 6 * s ** 2 + 4) / 6.0,
         (-3 * s ** 3 + 3 * s ** 2 + 3 * s + 1) / 6.0,
         s ** 3 / 6.0]
    return sum(b[r] * p[(j - 1 + r) % 8] for r in range(4))


def line(a, b, n):
    return [a + (b - a) * k / n for k in range(n + 1)]


def mesh_wedge(zeta, h):
    a = spline(zeta, 4.0)
    d = spline(zeta, 5.0)
    b = np.array([1.0, 0.5])
    c = np.array([1.0, 1.0])
    n_ab = max(1, round(np.linalg.norm(b - a) / h))
    n_bc = max(1, round(np.linalg.norm(c - b) / h))
    n_cd = max(1, round(np.linalg.norm(d - c) / h))
    arc = sum(np.linalg.norm(spline(zeta, 4 + (k + 1) / 64) - spline(zeta, 4 + k / 64)) for k in range(64))
    n_arc = max(1, round(arc / h))

    pts, curve_u = [], {}
    for p in line(a, b, n_ab)[:-1]:
        pts.append(p)
    for p in line(b, c, n_bc)[:-1]:
        pts.append(p)
    for p in line(c, d, n_cd)[:-1]:
        pts.append(p)
    for k in range(n_arc):
        u = 5.0 - k / n_arc
        curve_u[len(pts)] = u
        pts.append(spline(zeta, u))
    curve_u[0] = 4.0
    npts = len(pts)
    segs = [(i, (i + 1) % npts) for i in range(npts)]
    area = h * h * math.sqrt(3) / 4
    out = triangle.triangulate({"vertices": np.array(pts), "segments": np.array(segs)},
                               f"pq30Ya{area:.8f}o2")
    verts = out["vertices"].copy()
    tris = out["triangles"]
    elems = []
    for t in tris:
        c0, c1, c2 = t[0], t[1], t[2]
        mids = list(t[3:6])
        ordered = []
        for (p, q) in ((c0, c1), (c1, c2), (c2, c0)):
            target = 0.5 * (verts[p] + verts[q])
            m = min(mids, key=lambda k: np.linalg.norm(verts[k] - target))
            ordered.append(m)
            if p in curve_u and q in curve_u:
                verts[m] = spline(zeta, 0.5 * (curve_u[p] + curve_u[q]))
                curve_u[m] = 0.5 * (curve_u[p] + curve_u[q])
        elems.append([c0, c1, c2] + ordered)
    on_curve = set(curve_u.keys())
    return verts, elems, on_curve


D4 = [
    lambda x, y: (x, y),
    lambda x, y: (1 - y, x),
    lambda x, y: (1 - x, 1 - y),
    lambda x, y: (y, 1 - x),
    lambda x, y: (x, 1 - y),
    lambda x, y: (1 - x, y),
    lambda x, y: (y, x),
    lambda x, y: (1 - y, 1 - x),
]

# hole_0 top-right, hole_1 top-left, hole_2 bottom-left, hole_3 bottom-right
SHIFTS = [(0.0, 0.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0)]


def build_rve(zeta, h):
    wv, we, wc = mesh_wedge(zeta, h)
    key_to_id, nodes, hole_of = {}, [], {}
    elements = []

    def node_id(x, y, hole):
        key = (round(x, 9), round(y, 9))
        if key not in key_to_id:
            key_to_id[key] = len(nodes)
            nodes.append([x, y])
        nid = key_to_id[key]
        if hole is not None:
            hole_of[nid] = hole
        return nid

    for hole, (sx, sy) in enumerate(SHIFTS):
        for g in D4:
            local = {}
            for k, (x, y) in enumerate(wv):
                gx, gy = g(x, y)
                local[k] = node_id(gx + sx, gy + sy, hole if k in wc else None)
            for e in we:
                ids = [local[k] for k in e]
                p = [np.array(nodes[i]) for i in ids[:3]]
                signed = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])
                if signed < 0:
                    ids = [ids[0], ids[2], ids[1], ids[5], ids[4], ids[3]]
                elements.append(ids)

    tol = 1e-9
    tags = {"top": [], "bottom": [], "left": [], "right": [], "corners": []}
    for i, (x, y) in enumerate(nodes):
        on_l, on_r = abs(x + 1) < tol, abs(x - 1) < tol
        on_b, on_t = abs(y + 1) < tol, abs(y - 1) < tol
        if (on_l or on_r) and (on_b or on_t):
            tags["corners"].append(i)
        elif on_t:
            tags["top"].append(i)
        elif on_b:
            tags["bottom"].append(i)
        elif on_l:
            tags["left"].append(i)
        elif on_r:
            tags["right"].append(i)
    for k in range(4):
        tags[f"hole_{k}"] = sorted(n for n, hk in hole_of.items() if hk == k)
    return nodes, elements, tags


def write(path, nodes, elements, tags):
    with open(path, "w") as f:
        json.dump({"nodes": [[float(repr_round(x)), float(repr_round(y))] for x, y in nodes],
                   "elements": [[int(i) for i in e] for e in elements],
                   "tags": {k: [int(i) for i in v] for k, v in tags.items()}}, f)


def repr_round(v):
    # exact zeros and unit coordinates stay exact after the symmetric copies
    for exact in (-1.0, -0.5, 0.0, 0.5, 1.0):
        if abs(v - exact) < 1e-13:
            return exact
    return v


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--zeta", type=float, default=0.025)
    ap.add_argument("--h", type=float, default=0.06)
    ap.add_argument("--single", action="store_true")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    if args.single:
        nodes = [[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]]
        write(args.out, nodes, [[0, 1, 2, 3, 4, 5]], {})
        return
    nodes, elements, tags = build_rve(args.zeta, args.h)
    write(args.out, nodes, elements, tags)
    print(f"{args.out}: {len(elements)} elements, {len(nodes)} nodes, {2 * len(nodes)} dofs")


if __name__ == "__main__":
    main()
