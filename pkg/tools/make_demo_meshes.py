"""Regenerate the shipped forward-facing-step and double-Mach-reflection meshes."""
import math
from pathlib import Path

import numpy as np

from qcader.mesh import Mesh, boundary_edges, generate_quad_patch, merge_patches, write_mesh

DATA = Path(__file__).resolve().parents[1] / "src" / "qcader" / "data"


def tagged_mesh(verts, cells, classify):
    tags = {}
    for a, b in boundary_edges(cells):
        tags[(a, b)] = classify(0.5 * (verts[a] + verts[b]))
    return Mesh(verts, cells, tags)


def ffs(n=20):
    patches = [
        generate_quad_patch([(0, 0), (0.6, 0), (0.6, 0.2), (0, 0.2)], 12 * n // 20, 4 * n // 20),
        generate_quad_patch([(0, 0.2), (0.6, 0.2), (0.6, 1), (0, 1)], 12 * n // 20, 16 * n // 20),
        generate_quad_patch([(0.6, 0.2), (3, 0.2), (3, 1), (0.6, 1)], 48 * n // 20, 16 * n // 20),
    ]
    v, c = merge_patches(patches)

    def classify(m):
        if abs(m[0]) < 1e-12:
            return "dirichlet"
        if abs(m[0] - 3) < 1e-12:
            return "outflow"
        return "wall"
    return tagged_mesh(v, c, classify)


def dmr():
    r3 = math.sqrt(3.0)
    patches = [
        generate_quad_patch([(-2, 0), (0, 0), (0, 2), (-2, 2)], 20, 12),
        generate_quad_patch([(0, 0), (3, r3), (3, 2), (0, 2)], 30, 12),
    ]
    v, c = merge_patches(patches)

    def classify(m):
        if abs(m[0] + 2) < 1e-12 or abs(m[1] - 2) < 1e-12:
            return "dirichlet"
        if abs(m[0] - 3) < 1e-12:
            return "outflow"
        return "wall"
    return tagged_mesh(v, c, classify)


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    for name, m in (("ffs.mesh", ffs()), ("dmr.mesh", dmr())):
        write_mesh(m, DATA / name)
        print(name, m.n_cells, "cells", m.cell_h.min(), m.cell_h.max())
