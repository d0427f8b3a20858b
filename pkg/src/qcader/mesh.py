"""Immutable polygonal meshes, their subcell triangulations and mesh file I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .quadrature import map_triangle, triangle_rule

BC_TAGS = ("wall", "dirichlet", "outflow")
WALL, DIRICHLET, OUTFLOW = 0, 1, 2


class MeshError(ValueError):
    """Invalid mesh geometry or malformed mesh file."""


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def _padded(rows, fill=-1, dtype=np.int64):
    width = max((len(r) for r in rows), default=0)
    out = np.full((len(rows), max(width, 1)), fill, dtype=dtype)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


def _csr_rows(mat: sp.csr_matrix, drop_diag: bool):
    mat = mat.tocsr()
    mat.sort_indices()
    rows = []
    for i in range(mat.shape[0]):
        idx = mat.indices[mat.indptr[i]:mat.indptr[i + 1]]
        if drop_diag:
            idx = idx[idx != i]
        rows.append(idx)
    return rows


class Mesh:
    """Polygonal tessellation with counterclockwise cells.

    Faces are stored once; ``face_left`` is the cell in which the face appears as
    ``face_vertices[f, 0] -> face_vertices[f, 1]`` and ``face_normal`` points out
    of it. Boundary faces have ``face_right == -1`` and a tag code in ``face_bc``.
    """

    def __init__(self, vertices, cells: Sequence[Sequence[int]], boundary_tags: Mapping[tuple, str]):
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        self.vertices = vertices
        self.cells = [tuple(int(v) for v in c) for c in cells]
        nc = len(self.cells)
        if nc == 0:
            raise MeshError("mesh has no cells")
        self.cell_nverts = np.array([len(c) for c in self.cells], dtype=np.int64)
        if self.cell_nverts.min() < 3:
            raise MeshError("cells need at least 3 vertices")
        self.cell_vertices = _padded(self.cells)

        # polygon geometry
        area = np.empty(nc)
        for i, c in enumerate(self.cells):
            xy = vertices[list(c)]
            x, y = xy[:, 0], xy[:, 1]
            area[i] = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            if area[i] <= 0.0:
                raise MeshError(f"cell {i}: non-positive signed area (orientation)")
            d1 = np.roll(xy, -1, axis=0) - xy
            d2 = np.roll(d1, -1, axis=0)
            cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            if np.any(cross < -1e-12 * area[i]):
                raise MeshError(f"cell {i}: non-convex polygon")
        self.cell_area = area
        bary = np.array([vertices[list(c)].mean(axis=0) for c in self.cells])
        self.cell_center = bary

        # faces
        edge_owner: dict[tuple, list] = {}
        for i, c in enumerate(self.cells):
            k = len(c)
            for m in range(k):
                a, b = c[m], c[(m + 1) % k]
                if a == b:
                    raise MeshError(f"cell {i}: repeated vertex")
                key = (min(a, b), max(a, b))
                edge_owner.setdefault(key, []).append((i, m, a, b))
        fv, fl, fr, flocal_l, flocal_r = [], [], [], [], []
        for key, owners in edge_owner.items():
            if len(owners) > 2:
                raise MeshError(f"edge {key} shared by more than two cells")
            i, m, a, b = owners[0]
            if len(owners) == 2:
                j, mj, aj, bj = owners[1]
                if aj == a:
                    raise MeshError(f"cells {i} and {j} have inconsistent orientation")
                fv.append((a, b)); fl.append(i); fr.append(j); flocal_l.append(m); flocal_r.append(mj)
            else:
                fv.append((a, b)); fl.append(i); fr.append(-1); flocal_l.append(m); flocal_r.append(-1)
        self.face_vertices = np.array(fv, dtype=np.int64)
        self.face_left = np.array(fl, dtype=np.int64)
        self.face_right = np.array(fr, dtype=np.int64)
        d = vertices[self.face_vertices[:, 1]] - vertices[self.face_vertices[:, 0]]
        self.face_length = np.hypot(d[:, 0], d[:, 1])
        self.face_normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / self.face_length[:, None]
        self.face_mid = 0.5 * (vertices[self.face_vertices[:, 0]] + vertices[self.face_vertices[:, 1]])
        nf = len(fv)

        # boundary tags
        bc = np.full(nf, -1, dtype=np.int64)
        key_to_face = {(min(a, b), max(a, b)): f for f, (a, b) in enumerate(fv)}
        for (a, b), tag in boundary_tags.items():
            f = key_to_face.get((min(a, b), max(a, b)))
            if f is None or self.face_right[f] >= 0:
                raise MeshError(f"dangling boundary face ({a}, {b})")
            if tag not in BC_TAGS:
                raise MeshError(f"unknown boundary tag {tag!r}")
            bc[f] = BC_TAGS.index(tag)
        missing = np.nonzero((self.face_right < 0) & (bc < 0))[0]
        if len(missing):
            a, b = fv[missing[0]]
            raise MeshError(f"boundary face ({a}, {b}) has no tag")
        self.face_bc = bc

        # cell -> faces, ordered as the cell's edges
        cf = np.full_like(self.cell_vertices, -1)
        sign = np.zeros_like(self.cell_vertices)
        for f in range(nf):
            cf[fl[f], flocal_l[f]] = f
            sign[fl[f], flocal_l[f]] = 1
            if fr[f] >= 0:
                cf[fr[f], flocal_r[f]] = f
                sign[fr[f], flocal_r[f]] = -1
        self.cell_faces = cf
        self.cell_face_sign = sign
        self.cell_perimeter = np.array(
            [self.face_length[cf[i, :self.cell_nverts[i]]].sum() for i in range(nc)])

        # characteristic length: radius of gyration by quadrature over the fan
        rule = triangle_rule(2)
        mom = np.zeros(nc)
        for i, c in enumerate(self.cells):
            xy = vertices[list(c)]
            pts, w = map_triangle(rule, np.broadcast_to(bary[i], xy.shape), xy, np.roll(xy, -1, axis=0))
            r2 = np.sum((pts - bary[i]) ** 2, axis=-1)
            mom[i] = np.sum(w * r2)
        self.cell_h = np.sqrt(mom / area)

        # vertex-neighbour cells (sharing at least one vertex), excluding self
        rows = np.repeat(np.arange(nc), self.cell_nverts)
        cols = np.concatenate([np.array(c) for c in self.cells])
        inc = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nc, len(vertices)))
        self.cell_neighbors = _padded(_csr_rows(inc @ inc.T, drop_diag=True))

        _freeze(self.vertices, self.cell_vertices, self.cell_nverts, self.cell_area, self.cell_center,
                self.face_vertices, self.face_left, self.face_right, self.face_length, self.face_normal,
                self.face_mid, self.face_bc, self.cell_faces, self.cell_face_sign, self.cell_perimeter,
                self.cell_h, self.cell_neighbors)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.face_length)

    @property
    def is_triangular(self) -> bool:
        return bool(np.all(self.cell_nverts == 3))

    def boundary_faces(self) -> np.ndarray:
        return np.nonzero(self.face_right < 0)[0]

    def boundary_tags(self) -> dict:
        return {tuple(int(v) for v in self.face_vertices[f]): BC_TAGS[self.face_bc[f]]
                for f in self.boundary_faces()}

    def fan_triangles(self, i: int):
        """Barycenter fan of cell i as three (k, 2) arrays a, b, c."""
        xy = self.vertices[list(self.cells[i])]
        return np.broadcast_to(self.cell_center[i], xy.shape), xy, np.roll(xy, -1, axis=0)

    def transformed(self, matrix) -> "Mesh":
        """Copy of the mesh with vertices mapped by a 2x2 orthogonal matrix."""
        m = np.asarray(matrix, dtype=float)
        if np.linalg.det(m) <= 0:
            raise MeshError("transformation must preserve orientation")
        return Mesh(self.vertices @ m.T, self.cells, self.boundary_tags())


# ----------------------------------------------------------------------------- generators

def generate_rect_mesh(bounds, target_h: float, perturb: float = 0.0, seed: int = 0,
                       tags: Mapping[str, str] | None = None) -> Mesh:
    """Structured triangulation of a rectangle.

    ``bounds = (x0, x1, y0, y1)``; ``target_h`` is the grid spacing of the seed
    lattice, each square is split along alternating diagonals. Interior nodes
    are jittered by up to ``perturb * target_h`` per coordinate. ``tags`` maps
    'left', 'right', 'bottom', 'top' to boundary tags (default wall).
    """
    x0, x1, y0, y1 = (float(b) for b in bounds)
    lx, ly = x1 - x0, y1 - y0
    if not (lx > 0 and ly > 0):
        raise MeshError("degenerate bounds")
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    if target_h > min(lx, ly) * (1 + 1e-12):
        raise MeshError("target_h exceeds the domain's short side")
    if not 0.0 <= perturb <= 0.3:
        raise MeshError("perturb must lie in [0, 0.3]")
    nx = max(1, int(round(lx / target_h)))
    ny = max(1, int(round(ly / target_h)))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)
    if perturb > 0:
        rng = np.random.default_rng(seed)
        inner = np.zeros((nx + 1, ny + 1), dtype=bool)
        inner[1:-1, 1:-1] = True
        inner = inner.ravel()
        jit = rng.uniform(-1.0, 1.0, size=(int(inner.sum()), 2))
        verts[inner] += perturb * np.array([lx / nx, ly / ny]) * jit

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                cells += [(a, b, c), (a, c, d)]
            else:
                cells += [(a, b, d), (b, c, d)]
    tags = dict(tags or {})
    side = {"left": tags.get("left", "wall"), "right": tags.get("right", "wall"),
            "bottom": tags.get("bottom", "wall"), "top": tags.get("top", "wall")}
    btags = {}
    for j in range(ny):
        btags[(vid(0, j), vid(0, j + 1))] = side["left"]
        btags[(vid(nx, j), vid(nx, j + 1))] = side["right"]
    for i in range(nx):
        btags[(vid(i, 0), vid(i + 1, 0))] = side["bottom"]
        btags[(vid(i, ny), vid(i + 1, ny))] = side["top"]
    return Mesh(verts, cells, btags)


def generate_quad_patch(corners, nx: int, ny: int):
    """Vertices and triangles of a convex quadrilateral patch via a bilinear map.

    ``corners`` are counterclockwise (p00, p10, p11, p01). Returns (vertices,
    cells) with cells referring to the returned vertex array.
    """
    p00, p10, p11, p01 = (np.asarray(c, dtype=float) for c in corners)
    s = np.linspace(0.0, 1.0, nx + 1)[:, None, None]
    t = np.linspace(0.0, 1.0, ny + 1)[None, :, None]
    P = (1 - s) * (1 - t) * p00 + s * (1 - t) * p10 + s * t * p11 + (1 - s) * t * p01
    verts = P.reshape(-1, 2)
    cells = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = i * (ny + 1) + j, (i + 1) * (ny + 1) + j, (i + 1) * (ny + 1) + j + 1, i * (ny + 1) + j + 1
            if (i + j) % 2 == 0:
                cells += [(a, b, c), (a, c, d)]
            else:
                cells += [(a, b, d), (b, c, d)]
    return verts, cells


def merge_patches(patches, tol: float = 1e-12):
    """Glue (vertices, cells) patches, identifying coincident vertices."""
    all_v, all_c, off = [], [], 0
    for v, c in patches:
        all_v.append(np.asarray(v, dtype=float))
        all_c += [tuple(x + off for x in cell) for cell in c]
        off += len(v)
    V = np.concatenate(all_v)
    key = np.round(V / tol).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    newv = V[first[order]]
    cells = [tuple(int(remap[inv[x]]) for x in cell) for cell in all_c]
    return newv, cells


def boundary_edges(cells):
    """Directed boundary edges (a, b) of a cell list."""
    seen = {}
    for c in cells:
        k = len(c)
        for m in range(k):
            a, b = c[m], c[(m + 1) % k]
            seen[(min(a, b), max(a, b))] = seen.get((min(a, b), max(a, b)), 0) + 1
    out = []
    for c in cells:
        k = len(c)
        for m in range(k):
            a, b = c[m], c[(m + 1) % k]
            if seen[(min(a, b), max(a, b))] == 1:
                out.append((a, b))
    return out


# ----------------------------------------------------------------------------- file I/O

def read_mesh(path) -> Mesh:
    """Parse the ``NV NC NBF`` text format; errors name the offending line."""
    lines = Path(path).read_text().splitlines()
    it = ((n + 1, ln.split()) for n, ln in enumerate(lines))
    it = ((n, tok) for n, tok in it if tok and not tok[0].startswith("#"))

    def nxt(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshError(f"unexpected end of file while reading {what}") from None

    n, tok = nxt("header")
    try:
        nv, nc, nbf = (int(t) for t in tok[:3])
    except ValueError:
        raise MeshError(f"line {n}: malformed header") from None
    verts = np.empty((nv, 2))
    seen = {}
    for k in range(nv):
        n, tok = nxt("vertices")
        try:
            verts[k] = float(tok[0]), float(tok[1])
        except (ValueError, IndexError):
            raise MeshError(f"line {n}: malformed vertex") from None
        key = (verts[k, 0], verts[k, 1])
        if key in seen:
            raise MeshError(f"line {n}: duplicate vertex (same as vertex {seen[key]})")
        seen[key] = k
    cells = []
    for k in range(nc):
        n, tok = nxt("cells")
        try:
            m = int(tok[0])
            ids = [int(t) for t in tok[1:1 + m]]
        except (ValueError, IndexError):
            raise MeshError(f"line {n}: malformed cell") from None
        if len(ids) != m or m < 3 or min(ids) < 0 or max(ids) >= nv:
            raise MeshError(f"line {n}: malformed cell")
        xy = verts[ids]
        a2 = np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
        if a2 <= 0:
            raise MeshError(f"line {n}: cell {k} has clockwise orientation")
        cells.append(tuple(ids))
    edges = {}
    for c in cells:
        for m in range(len(c)):
            key = (min(c[m], c[(m + 1) % len(c)]), max(c[m], c[(m + 1) % len(c)]))
            edges[key] = edges.get(key, 0) + 1
    tags = {}
    for k in range(nbf):
        n, tok = nxt("boundary faces")
        try:
            a, b, tag = int(tok[0]), int(tok[1]), tok[2]
        except (ValueError, IndexError):
            raise MeshError(f"line {n}: malformed boundary face") from None
        if edges.get((min(a, b), max(a, b))) != 1:
            raise MeshError(f"line {n}: dangling face ({a}, {b}) is not a boundary edge")
        if tag not in BC_TAGS:
            raise MeshError(f"line {n}: unknown boundary tag {tag!r}")
        tags[(a, b)] = tag
    return Mesh(verts, cells, tags)


def write_mesh(mesh: Mesh, path) -> None:
    bf = mesh.boundary_faces()
    out = [f"{len(mesh.vertices)} {mesh.n_cells} {len(bf)}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    out += [" ".join(str(v) for v in (len(c),) + c) for c in mesh.cells]
    out += [f"{mesh.face_vertices[f, 0]} {mesh.face_vertices[f, 1]} {BC_TAGS[mesh.face_bc[f]]}" for f in bf]
    Path(path).write_text("\n".join(out) + "\n")


# ----------------------------------------------------------------------------- subcells

@dataclass(frozen=True)
class SubcellGrid:
    """Flat subcell triangulation; subcells of cell i are ``offsets[i]:offsets[i+1]``.

    Subcell faces are stored once with sides ``face_a``/``face_b`` (``-1`` on the
    domain boundary) and a unit normal pointing out of ``face_a``.
    """

    N: int
    cell: np.ndarray
    offsets: np.ndarray
    nodes: np.ndarray
    node_xy: np.ndarray
    verts: np.ndarray
    area: np.ndarray
    centroid: np.ndarray
    h: np.ndarray
    face_a: np.ndarray
    face_b: np.ndarray
    face_normal: np.ndarray
    face_length: np.ndarray
    face_mid: np.ndarray
    face_parent: np.ndarray
    face_bc: np.ndarray
    sub_faces: np.ndarray
    sub_face_sign: np.ndarray
    neighbors: np.ndarray

    @property
    def n_sub(self) -> int:
        return len(self.area)

    def of_cell(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def cells_to_subcells(self, cells) -> np.ndarray:
        cells = np.asarray(cells, dtype=np.int64)
        if len(cells) == 0:
            return np.zeros(0, dtype=np.int64)
        counts = self.offsets[cells + 1] - self.offsets[cells]
        starts = np.repeat(self.offsets[cells] - np.cumsum(counts) + counts, counts)
        return starts + np.arange(counts.sum())


def build_subcells(mesh: Mesh, N: int) -> SubcellGrid:
    """Barycenter fan of every cell, each fan triangle refined into N^2 triangles."""
    if N < 1:
        raise MeshError("subcell refinement needs N >= 1")
    lattice = [(i, j) for i in range(N + 1) for j in range(N + 1 - i)]
    up = [((i, j), (i + 1, j), (i, j + 1)) for i in range(N) for j in range(N - i)]
    down = [((i + 1, j), (i + 1, j + 1), (i, j + 1)) for i in range(N - 1) for j in range(N - 1 - i)]
    tris = up + down

    node_id: dict = {}
    node_xy: list = []
    sub_nodes, sub_cell = [], []
    offsets = [0]
    V = mesh.vertices
    for c, loop in enumerate(mesh.cells):
        xb = mesh.cell_center[c]
        k = len(loop)
        for m in range(k):
            va, vb = loop[m], loop[(m + 1) % k]
            pa, pb = V[va], V[vb]
            local = {}
            for (i, j) in lattice:
                if i == 0 and j == 0:
                    key = ("b", c)
                    xy = xb
                elif i + j == N:
                    if j == 0:
                        key, xy = ("v", va), pa
                    elif i == 0:
                        key, xy = ("v", vb), pb
                    else:
                        lo, hi = (va, vb) if va < vb else (vb, va)
                        pos = j if va < vb else i
                        key = ("e", lo, hi, pos)
                        xy = V[lo] + (pos / N) * (V[hi] - V[lo])
                elif j == 0:
                    key, xy = ("s", c, va, i), xb + (i / N) * (pa - xb)
                elif i == 0:
                    key, xy = ("s", c, vb, j), xb + (j / N) * (pb - xb)
                else:
                    key = ("i", c, m, i, j)
                    xy = xb + (i / N) * (pa - xb) + (j / N) * (pb - xb)
                nid = node_id.get(key)
                if nid is None:
                    nid = len(node_xy)
                    node_id[key] = nid
                    node_xy.append(np.asarray(xy, dtype=float))
                local[(i, j)] = nid
            for t in tris:
                sub_nodes.append([local[t[0]], local[t[1]], local[t[2]]])
                sub_cell.append(c)
        offsets.append(len(sub_cell))
    nodes = np.array(sub_nodes, dtype=np.int64)
    node_xy = np.array(node_xy)
    verts = node_xy[nodes]
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(area <= 0):
        raise MeshError("fan subcells overlap or degenerate (non-convex cell)")
    centroid = verts.mean(axis=1)
    ns = len(area)
    sub_cell = np.array(sub_cell, dtype=np.int64)

    # subcell faces via sorted node pairs; local edge m joins nodes m and m+1
    ea = nodes
    eb = np.roll(nodes, -1, axis=1)
    lo = np.minimum(ea, eb).ravel()
    hi = np.maximum(ea, eb).ravel()
    key = lo * len(node_xy) + hi
    uniq, inv, cnt = np.unique(key, return_inverse=True, return_counts=True)
    if cnt.max() > 2:
        raise MeshError("subcell edge shared by more than two subcells")
    owner = np.repeat(np.arange(ns), 3)
    order = np.argsort(inv, kind="stable")
    nfs = len(uniq)
    first = np.full(nfs, -1, dtype=np.int64)
    second = np.full(nfs, -1, dtype=np.int64)
    loc_first = np.full(nfs, -1, dtype=np.int64)
    inv_sorted = inv[order]
    start = np.searchsorted(inv_sorted, np.arange(nfs))
    first[:] = owner[order[start]]
    loc_first[:] = order[start] % 3
    two = cnt == 2
    second[two] = owner[order[start[two] + 1]]
    sub_faces = inv.reshape(ns, 3)
    sign = np.where(owner.reshape(ns, 3) == first[sub_faces], 1, -1)
    pa = verts[first, loc_first]
    pb = verts[first, (loc_first + 1) % 3]
    d = pb - pa
    flen = np.hypot(d[:, 0], d[:, 1])
    fnormal = np.stack([d[:, 1], -d[:, 0]], axis=1) / flen[:, None]
    fmid = 0.5 * (pa + pb)

    # parent faces: subcell faces lying on a parent-cell edge
    fparent = np.full(nfs, -1, dtype=np.int64)
    cross = (second >= 0) & (sub_cell[np.maximum(second, 0)] != sub_cell[first])
    bnd = second < 0
    cand = np.nonzero(cross | bnd)[0]
    cc = sub_cell[first[cand]]
    best_d = np.full(len(cand), np.inf)
    for m in range(mesh.cell_faces.shape[1]):
        pf = mesh.cell_faces[cc, m]
        ok = pf >= 0
        pf = np.maximum(pf, 0)
        q0 = V[mesh.face_vertices[pf, 0]]
        q1 = V[mesh.face_vertices[pf, 1]]
        rel = fmid[cand] - q0
        dist = np.abs(np.sum(rel * mesh.face_normal[pf], axis=1))
        along = np.sum(rel * (q1 - q0), axis=1) / mesh.face_length[pf] ** 2
        hit = ok & (along > -1e-9) & (along < 1 + 1e-9) & (dist < best_d)
        best_d[hit] = dist[hit]
        fparent[cand[hit]] = pf[hit]
    if np.any(bnd & (fparent < 0)) or np.any(mesh.face_right[fparent[bnd]] >= 0):
        raise MeshError("boundary subcell face not on a boundary parent face")
    fbc = np.full(nfs, -1, dtype=np.int64)
    fbc[bnd] = mesh.face_bc[fparent[bnd]]

    # vertex-neighbour subcells
    inc = sp.csr_matrix((np.ones(3 * ns), (owner, nodes.ravel())), shape=(ns, len(node_xy)))
    nbrs = _padded(_csr_rows(inc @ inc.T, drop_diag=True))

    grid = SubcellGrid(N=N, cell=sub_cell, offsets=np.array(offsets, dtype=np.int64), nodes=nodes,
                       node_xy=node_xy, verts=verts, area=area, centroid=centroid, h=np.sqrt(area),
                       face_a=first, face_b=second, face_normal=fnormal, face_length=flen, face_mid=fmid,
                       face_parent=fparent, face_bc=fbc, sub_faces=sub_faces, sub_face_sign=sign,
                       neighbors=nbrs)
    for name in grid.__dataclass_fields__:
        v = getattr(grid, name)
        if isinstance(v, np.ndarray):
            v.setflags(write=False)
    return grid
