"""Generate Voronoi meshes of the unit square in fvca-poly format.

Seeds are a jittered hexagonal lattice relaxed by a few Lloyd iterations.
Cells are clipped to the square by mirroring the seeds across the four
sides, so every cell is convex and the boundary is exact.

    python3 make_voronoi.py --cells 256 --seed 7 --out ../../data/meshes/voronoi_256.fvca
"""

import argparse

import numpy as np
from scipy.spatial import Voronoi


def lattice(n_cells, rng, jitter):
    rows = max(1, int(round(np.sqrt(n_cells * np.sqrt(3) / 2))))
    cols = max(1, int(round(n_cells / rows)))
    pts = []
    for j in range(rows):
        for i in range(cols):
            x = (i + 0.5 + 0.5 * (j % 2)) / cols
            y = (j + 0.5) / rows
            pts.append((x % 1.0, y))
    pts = np.array(pts)
    pts += jitter * rng.uniform(-1, 1, pts.shape) / cols
    return np.clip(pts, 1e-3, 1 - 1e-3)


def mirrored(pts):
    x, y = pts[:, 0], pts[:, 1]
    return np.vstack([pts,
                      np.c_[-x, y], np.c_[2 - x, y],
                      np.c_[x, -y], np.c_[x, 2 - y]])


def cells(pts):
    vor = Voronoi(mirrored(pts))
    out = []
    for i in range(len(pts)):
        region = vor.regions[vor.point_region[i]]
        poly = vor.vertices[region]
        c = poly.mean(axis=0)
        order = np.argsort(np.arctan2(poly[:, 1] - c[1], poly[:, 0] - c[0]))
        out.append(np.clip(poly[order], 0.0, 1.0))
    return out


def lloyd(pts, iterations):
    for _ in range(iterations):
        new = []
        for poly in cells(pts):
            x, y = poly[:, 0], poly[:, 1]
            xs, ys = np.roll(x, -1), np.roll(y, -1)
            cross = x * ys - xs * y
            a = cross.sum() / 2
            new.append(((x + xs) @ cross / (6 * a), (y + ys) @ cross / (6 * a)))
        pts = np.array(new)
    return pts


def snap(v):
    v = v.copy()
    v[np.abs(v) < 1e-12] = 0.0
    v[np.abs(v - 1) < 1e-12] = 1.0
    return v


def build(n_cells, seed, jitter, iterations):
    rng = np.random.default_rng(seed)
    pts = lloyd(lattice(n_cells, rng, jitter), iterations)
    vertices, index, loops = [], {}, []
    for poly in cells(pts):
        loop = []
        for p in snap(poly):
            key = (round(p[0], 10), round(p[1], 10))
            if key not in index:
                index[key] = len(vertices)
                vertices.append(p)
            k = index[key]
            if not loop or loop[-1] != k:
                loop.append(k)
        if loop[0] == loop[-1]:
            loop.pop()
        loops.append(loop)
    return np.array(vertices), loops


def write(path, vertices, loops, header):
    with open(path, "w") as f:
        f.write(f"# {header}\n")
        f.write(f"VERTICES {len(vertices)}\n")
        for x, y in vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"ELEMENTS {len(loops)}\n")
        for loop in loops:
            f.write(" ".join(str(v) for v in [len(loop)] + [i + 1 for i in loop]) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, required=True)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jitter", type=float, default=0.3)
    ap.add_argument("--lloyd", type=int, default=5)
    ap.add_argument("--out", required=True)
    a = ap.parse_args()
    vertices, loops = build(a.cells, a.seed, a.jitter, a.lloyd)
    write(a.out, vertices, loops,
          f"Voronoi mesh of (0,1)^2, {len(loops)} cells, seed {a.seed}, jitter {a.jitter}, lloyd {a.lloyd}")


if __name__ == "__main__":
    main()
