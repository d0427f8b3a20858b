"""Result writers: legacy VTK per subcell and CSV scatter along an axis."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import VAR_NAMES


def _check(U):
    U = np.asarray(U, dtype=float)
    if not np.all(np.isfinite(U)):
        raise ValueError("field contains non-finite values")
    return U


def write_vtk(path, subcells, U, flags, title: str = "qcader") -> None:
    """Legacy ASCII unstructured grid: one triangle per subcell with rho, u, v, p, chi and the parent flag."""
    U = _check(U)
    path = Path(path)
    flags = np.asarray(flags)
    ns = subcells.n_sub
    pts = subcells.verts.reshape(-1, 2)
    with path.open("w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {3 * ns} double\n")
        np.savetxt(fh, np.column_stack([pts, np.zeros(len(pts))]), fmt="%.17g")
        fh.write(f"CELLS {ns} {4 * ns}\n")
        conn = np.column_stack([np.full(ns, 3), np.arange(3 * ns).reshape(ns, 3)])
        np.savetxt(fh, conn, fmt="%d")
        fh.write(f"CELL_TYPES {ns}\n")
        np.savetxt(fh, np.full(ns, 5), fmt="%d")
        fh.write(f"CELL_DATA {ns}\n")
        for k, name in enumerate(VAR_NAMES):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, U[:, k], fmt="%.17g")
        fh.write("SCALARS flag int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, flags[subcells.cell].astype(int), fmt="%d")


def write_scatter_csv(path, subcells, U, flags, axis: int = 0) -> None:
    """Subcell-centroid values sorted along ``axis`` (0: x, 1: y)."""
    U = _check(U)
    flags = np.asarray(flags)
    order = np.lexsort((subcells.centroid[:, 1 - axis], subcells.centroid[:, axis]))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", *VAR_NAMES, "flag"])
        for s in order:
            w.writerow([repr(float(subcells.centroid[s, 0])), repr(float(subcells.centroid[s, 1]))]
                       + [repr(float(x)) for x in U[s]] + [int(flags[subcells.cell[s]])])
