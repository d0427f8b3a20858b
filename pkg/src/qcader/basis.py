"""Modal Taylor bases, per-cell DG operators and the subcell projection/reconstruction pair."""
from __future__ import annotations

from math import comb

import numpy as np

from .mesh import Mesh, SubcellGrid
from .quadrature import edge_rule, map_triangle, time_rule, triangle_rule


def dof_count(N: int, d: int) -> int:
    """Number of monomials of total degree <= N in d variables."""
    if N < 0 or d not in (1, 2, 3):
        raise ValueError("need N >= 0 and d in {1, 2, 3}")
    return comb(N + d, d)


class BasisSet:
    """Multi-index tables of the spatial and space-time Taylor bases of degree N."""

    def __init__(self, N: int):
        if N < 0:
            raise ValueError("degree must be non-negative")
        self.N = N
        self.space = np.array([(d - q, q) for d in range(N + 1) for q in range(d + 1)], dtype=np.int64)
        st = []
        for d in range(N + 1):
            for r in range(d + 1):
                for q in range(d - r + 1):
                    st.append((d - r - q, q, r))
        self.spacetime = np.array(st, dtype=np.int64)
        self.n_space = len(self.space)
        self.n_st = len(self.spacetime)
        assert self.n_space == dof_count(N, 2) and self.n_st == dof_count(N, 3)
        index = {tuple(pq): k for k, pq in enumerate(self.space.tolist())}
        # space index of every space-time mode with r = 0 (-1 otherwise)
        self.st_to_space = np.array([index[(p, q)] if r == 0 else -1 for p, q, r in st], dtype=np.int64)
        self.st_space_part = np.array([index[(p, q)] for p, q, _ in st], dtype=np.int64)
        self.r = self.spacetime[:, 2]


def monomials(xi, eta, pq):
    """Values and (xi, eta)-derivatives of xi^p eta^q for index table pq."""
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    p = pq[:, 0]
    q = pq[:, 1]
    xp = xi ** p
    yq = eta ** q
    dxp = np.where(p > 0, p * xi ** np.maximum(p - 1, 0), 0.0)
    dyq = np.where(q > 0, q * eta ** np.maximum(q - 1, 0), 0.0)
    return xp * yq, dxp * yq, xp * dyq


def space_basis(basis: BasisSet, center, h, pts):
    """phi and its physical gradient at points ``pts`` (..., 2) of cells with given center/h.

    ``center`` is broadcast as (..., 2) and ``h`` as (...).
    """
    center = np.asarray(center, dtype=float)
    h = np.asarray(h, dtype=float)
    xi = (pts[..., 0] - center[..., 0]) / h
    eta = (pts[..., 1] - center[..., 1]) / h
    v, dx, dy = monomials(xi, eta, basis.space)
    return v, dx / h[..., None], dy / h[..., None]


def eval_space_basis(mesh: Mesh, basis: BasisSet, i: int, x) -> np.ndarray:
    return space_basis(basis, mesh.cell_center[i], mesh.cell_h[i], np.asarray(x, dtype=float))[0]


def eval_spacetime_basis(mesh: Mesh, basis: BasisSet, i: int, x, t, tn: float = 0.0) -> np.ndarray:
    """theta_l = phi_(p,q)(x) ((t - tn) / h_i)^r."""
    phi = eval_space_basis(mesh, basis, i, x)
    tau = (np.asarray(t, dtype=float) - tn) / mesh.cell_h[i]
    return phi[..., basis.st_space_part] * np.asarray(tau)[..., None] ** basis.r


def project_to_subcells(coeffs, P):
    """Subcell averages from modal coefficients: (N_tau, n) @ (n, m)."""
    return np.asarray(P) @ np.asarray(coeffs)


def reconstruct_from_subcells(averages, R):
    """Modal coefficients from subcell averages: (n, N_tau) @ (N_tau, m)."""
    return np.asarray(R) @ np.asarray(averages)


def reconstruction_matrix(P: np.ndarray, areas: np.ndarray) -> np.ndarray:
    """Mean-preserving, area-weighted least-squares inverse of the projection P.

    The mean constraint sum_a |tau_a| (P c)_a = sum_a |tau_a| U_a is eliminated
    through mode 0 (P[:, 0] == 1), the remaining modes solve scaled normal
    equations. Works on stacks (..., N_tau, n).
    """
    P = np.asarray(P, dtype=float)
    a = np.asarray(areas, dtype=float)
    nt, n = P.shape[-2:]
    if nt < n:
        raise np.linalg.LinAlgError("fewer subcells than modes")
    vol = a.sum(axis=-1)
    g = np.einsum("...a,...al->...l", a, P)  # integrals of the basis functions
    ones = np.ones(nt)
    # c0 = (a.U - g_r.c_r)/g0 ;  P c = P0 c0 + P_r c_r
    Pt = P[..., 1:] - P[..., :, :1] * (g[..., None, 1:] / g[..., None, :1])
    w = a / vol[..., None]
    Bproj = np.eye(nt) - ones[:, None] * (a / g[..., :1])[..., None, :]  # U - 1 (a.U)/g0
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = 1.0 / np.sqrt(np.einsum("...al,...a,...al->...l", Pt, w, Pt))
        Ps = Pt * scale[..., None, :]
        normal = np.einsum("...al,...a,...am->...lm", Ps, w, Ps)
    if not np.all(np.isfinite(normal)) or np.any(np.linalg.cond(normal) > 1e13):
        raise np.linalg.LinAlgError("rank-deficient subcell reconstruction")
    rhs = np.einsum("...al,...a,...ab->...lb", Ps, w, Bproj)
    cr = np.linalg.solve(normal, rhs) * scale[..., :, None]
    c0 = (a / g[..., :1] - np.einsum("...l,...lb->...b", g[..., 1:], cr) / g[..., :1])[..., None, :]
    return np.concatenate([c0, cr], axis=-2)


class CellOperators:
    """Per-cell DG operators, quadrature tables and subcell transfer matrices.

    Internally the predictor works on the unit reference slab tau = (t - tn)/dt
    with basis psi_l = phi_(p,q) tau^r; ``theta_matrices`` gives the physical
    space-time forms for a specific dt.
    """

    def __init__(self, mesh: Mesh, subcells: SubcellGrid | None, basis: BasisSet, dt: float = 1.0):
        N = basis.N
        self.mesh, self.subcells, self.basis, self.dt = mesh, subcells, basis, dt
        nc = mesh.n_cells
        n, L = basis.n_space, basis.n_st
        center, h = mesh.cell_center, mesh.cell_h

        # volume quadrature (triangles directly, polygons through their fan)
        vrule = triangle_rule(2 * N + 1)
        nqt = len(vrule)
        fan_count = np.where(mesh.cell_nverts == 3, 1, mesh.cell_nverts)
        nq = nqt * int(fan_count.max())
        pts = np.zeros((nc, nq, 2))
        w = np.zeros((nc, nq))
        tri = mesh.cell_nverts == 3
        if tri.any():
            cv = mesh.cell_vertices[tri][:, :3]
            p, ww = map_triangle(vrule, mesh.vertices[cv[:, 0]], mesh.vertices[cv[:, 1]], mesh.vertices[cv[:, 2]])
            pts[tri, :nqt] = p
            w[tri, :nqt] = ww
        for i in np.nonzero(~tri)[0]:
            a, b, c = mesh.fan_triangles(i)
            p, ww = map_triangle(vrule, a, b, c)
            k = len(a)
            pts[i, :k * nqt] = p.reshape(-1, 2)
            w[i, :k * nqt] = ww.ravel()
            pts[i, k * nqt:] = center[i]
        self.vol_pts, self.vol_w = pts, w
        phi, phx, phy = space_basis(basis, center[:, None, :], h[:, None], pts)
        self.phi, self.phi_x, self.phi_y = phi, phx, phy
        self.mass = np.einsum("cq,cqk,cql->ckl", w, phi, phi)
        self.mass_cond = np.linalg.cond(self.mass)
        if not np.all(np.isfinite(self.mass_cond)) or np.any(np.linalg.eigvalsh(self.mass)[:, 0] <= 0):
            raise np.linalg.LinAlgError("singular mass matrix")
        self.mass_inv = np.linalg.inv(self.mass)

        # time rule and space-time tables on the reference slab
        trule = time_rule(N + 1)
        self.t_nodes, self.t_w = trule.points, trule.weights
        nt = len(trule)
        tp = self.t_nodes[:, None] ** basis.r[None, :]  # (nt, L)
        sp_idx = basis.st_space_part
        # ordering of space-time points: time-major (t, q)
        self.psi = (tp[None, :, None, :] * phi[:, None, :, sp_idx]).reshape(nc, nt * nq, L)
        self.psi_x = (tp[None, :, None, :] * phx[:, None, :, sp_idx]).reshape(nc, nt * nq, L)
        self.psi_y = (tp[None, :, None, :] * phy[:, None, :, sp_idx]).reshape(nc, nt * nq, L)
        self.st_w = (self.t_w[None, :, None] * w[:, None, :]).reshape(nc, nt * nq)
        self.n_vol, self.n_time = nq, nt

        S = self.mass[:, sp_idx][:, :, sp_idx]  # spatial parts, (nc, L, L)
        rk = basis.r[:, None].astype(float)
        rl = basis.r[None, :].astype(float)
        tot = rk + rl
        frac = np.where(tot > 0, rl / np.where(tot > 0, tot, 1.0), 1.0)
        self.K1_ref = S * frac
        self.M_ref = S / (tot + 1.0)
        F0 = np.zeros((nc, L, n))
        r0 = basis.st_to_space >= 0
        F0[:, r0, :] = self.mass[:, basis.st_to_space[r0], :]
        self.F0 = F0
        self.K1_ref_inv = np.linalg.inv(self.K1_ref)
        # c = c_ext - dt * KW @ H(st points)
        self.KW = np.einsum("ckl,cql,cq->ckq", self.K1_ref_inv, self.psi, self.st_w)
        # corrector volume test functions, time-integrated weights applied later
        self.phiW = np.einsum("cqk,cq->ckq", phi, w)

        # basis at cell corners (zero rows for padding)
        cv = mesh.cell_vertices
        self.corner_valid = cv >= 0
        self.corner_phi = space_basis(basis, center[:, None, :], h[:, None], mesh.vertices[np.maximum(cv, 0)])[0]

        # face quadrature
        erule = edge_rule(2 * N + 1)
        ne = len(erule)
        fa = mesh.vertices[mesh.face_vertices[:, 0]]
        fb = mesh.vertices[mesh.face_vertices[:, 1]]
        fpts = fa[:, None, :] + erule.points[None, :, None] * (fb - fa)[:, None, :]
        self.face_pts = fpts
        self.face_w = erule.weights[None, :] * mesh.face_length[:, None]
        L_, R_ = mesh.face_left, mesh.face_right
        Rc = np.maximum(R_, 0)
        phiL = space_basis(basis, center[L_][:, None, :], h[L_][:, None], fpts)[0]
        phiR = space_basis(basis, center[Rc][:, None, :], h[Rc][:, None], fpts)[0]
        phiR[R_ < 0] = 0.0
        self.face_phiL, self.face_phiR = phiL, phiR
        # weighted face test functions (nf, n, ne) for the corrector
        self.face_WL = np.transpose(phiL * self.face_w[..., None], (0, 2, 1)).copy()
        self.face_WR = np.transpose(phiR * self.face_w[..., None], (0, 2, 1)).copy()
        self.face_psiL = (tp[None, :, None, :] * phiL[:, None, :, sp_idx]).reshape(len(fa), nt * ne, L)
        self.face_psiR = (tp[None, :, None, :] * phiR[:, None, :, sp_idx]).reshape(len(fa), nt * ne, L)
        self.n_edge = ne

        # subcells
        if subcells is not None:
            sc = subcells.cell
            srule = triangle_rule(max(N, 1))
            v = subcells.verts
            sp_, sw = map_triangle(srule, v[:, 0], v[:, 1], v[:, 2])
            vals = space_basis(basis, center[sc][:, None, :], h[sc][:, None], sp_)[0]
            self.P = np.einsum("sq,sql->sl", sw, vals) / subcells.area[:, None]
            Rflat = np.zeros_like(self.P)
            counts = np.diff(subcells.offsets)
            for cnt in np.unique(counts):
                cells = np.nonzero(counts == cnt)[0]
                idx = subcells.offsets[cells][:, None] + np.arange(cnt)[None, :]
                Rm = reconstruction_matrix(self.P[idx], subcells.area[idx])  # (ng, n, cnt)
                Rflat[idx] = np.transpose(Rm, (0, 2, 1))
            self.R = Rflat
            # DG predictor tables at subcell-face midpoints of parent faces, mid-time
            self.tp_half = 0.5 ** basis.r
        else:
            self.P = self.R = None

    # ---- per-cell views for the public API

    def P_cell(self, i: int) -> np.ndarray:
        return self.P[self.subcells.of_cell(i)]

    def R_cell(self, i: int) -> np.ndarray:
        return self.R[self.subcells.of_cell(i)].T

    def theta_matrices(self, i: int, dt: float | None = None):
        """K1, F0, M of cell i in the physical space-time basis theta for slab length dt."""
        dt = self.dt if dt is None else dt
        s = dt / self.mesh.cell_h[i]
        D = s ** self.basis.r.astype(float)
        K1 = self.K1_ref[i] * D[:, None] * D[None, :]
        M = dt * self.M_ref[i] * D[:, None] * D[None, :]
        return K1, self.F0[i].copy(), M

    def cell_mean(self, coeffs) -> np.ndarray:
        """Cell means of modal fields (nc, n, m)."""
        ints = np.einsum("cq,cql->cl", self.vol_w, self.phi)
        return np.einsum("cl,clm->cm", ints, coeffs) / self.mesh.cell_area[:, None]

    def project(self, coeffs) -> np.ndarray:
        """All subcell averages of a modal field (nc, n, m) -> (n_sub, m)."""
        return np.einsum("sl,slm->sm", self.P, coeffs[self.subcells.cell])

    def reconstruct(self, averages, cells=None) -> np.ndarray:
        """Modal coefficients for ``cells`` from flat subcell averages (n_sub, m)."""
        sg = self.subcells
        cells = np.arange(self.mesh.n_cells) if cells is None else np.asarray(cells)
        sub = sg.cells_to_subcells(cells)
        contrib = self.R[sub][:, :, None] * averages[sub][:, None, :]
        starts = np.concatenate([[0], np.cumsum(sg.offsets[cells + 1] - sg.offsets[cells])[:-1]])
        if len(sub) == 0:
            return np.zeros((0,) + contrib.shape[1:])
        return np.add.reduceat(contrib, starts, axis=0)


def build_cell_operators(mesh: Mesh, subcells: SubcellGrid | None, basis: BasisSet, dt: float = 1.0) -> CellOperators:
    return CellOperators(mesh, subcells, basis, dt)


def project_field(ops: CellOperators, func) -> np.ndarray:
    """L2 projection of a pointwise function (pts (..., 2) -> (..., m)) onto the DG space."""
    vals = func(ops.vol_pts)
    rhs = np.einsum("cq,cqk,cqm->ckm", ops.vol_w, ops.phi, vals)
    return ops.mass_inv @ rhs
