"""Unlimited ADER-DG update: local space-time predictor, path-integrated corrector, time step."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import CellOperators
from .mesh import DIRICHLET, WALL, Mesh
from .system import EosClosure, fluctuations, is_admissible, max_wavespeed, quasilinear

PREDICTOR_TOL = 1e-7


class TimeStepError(RuntimeError):
    pass


@dataclass
class Boundary:
    """Ghost-state rules per boundary tag; ``dirichlet(pts, t)`` returns primitive states."""

    dirichlet: Callable | None = None

    def ghost(self, v_in, bc, normal, pts, t: float):
        """Ghost states for interior traces ``v_in`` (..., 5) at boundary points."""
        v = np.array(v_in, dtype=float, copy=True)
        bc = np.broadcast_to(bc, v.shape[:-1])
        normal = np.broadcast_to(normal, v.shape[:-1] + (2,))
        wall = bc == WALL
        if np.any(wall):
            n = normal[wall]
            un = v[wall, 1] * n[:, 0] + v[wall, 2] * n[:, 1]
            v[wall, 1] -= 2.0 * un * n[:, 0]
            v[wall, 2] -= 2.0 * un * n[:, 1]
        dmask = bc == DIRICHLET
        if np.any(dmask):
            if self.dirichlet is None:
                raise ValueError("dirichlet boundary without a boundary state")
            p = np.broadcast_to(pts, v.shape[:-1] + (2,))[dmask]
            v[dmask] = self.dirichlet(p, t)
        return v


@dataclass
class Discretization:
    """Everything a step needs that does not change in time."""

    mesh: Mesh
    subcells: object
    ops: CellOperators
    eos: EosClosure
    boundary: Boundary
    m1: float = 1.0
    eno: str = "parent"
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.ops.basis.N


@dataclass
class Predictor:
    """Reference-slab space-time coefficients (nc, L, 5) and convergence status."""

    coeffs: np.ndarray
    iterations: np.ndarray
    increment: np.ndarray
    failed: np.ndarray
    H: np.ndarray | None = None
    V: np.ndarray | None = None

    def theta_coeffs(self, mesh: Mesh, basis, dt: float) -> np.ndarray:
        """Coefficients in the physical basis theta (rescaled time monomials)."""
        s = mesh.cell_h / dt
        return self.coeffs * (s[:, None] ** basis.r[None, :])[..., None]


@dataclass
class FaceTraces:
    """Flattened trace records of one step: flux of (vm -> vp) with normal n, weight w.

    ``cell_m``/``cell_p`` name the cells whose balance receives +w F / -w F
    (-1: not accounted here). ``boundary`` marks records on the domain boundary.
    """

    vm: np.ndarray
    vp: np.ndarray
    n: np.ndarray
    w: np.ndarray
    cell_m: np.ndarray
    cell_p: np.ndarray
    boundary: np.ndarray

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if p is not None and len(p.w)]
        if not parts:
            z = np.zeros((0, 5))
            e = np.zeros(0, dtype=np.int64)
            return FaceTraces(z, z, np.zeros((0, 2)), np.zeros(0), e, e, np.zeros(0, dtype=bool))
        return FaceTraces(*(np.concatenate([getattr(p, k) for p in parts])
                            for k in ("vm", "vp", "n", "w", "cell_m", "cell_p", "boundary")))


def corner_values(ops: CellOperators, coeffs):
    """Polynomial values at cell corners (nc, kmax, 5) and a validity mask."""
    return ops.corner_phi @ coeffs, ops.corner_valid


def cell_wavespeed(ops: CellOperators, coeffs, eos: EosClosure, extra=None):
    """max |lambda| over the cell mean and admissible corner values (and extra per-cell speeds)."""
    mean = ops.cell_mean(coeffs)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = max_wavespeed(mean, eos)
        cvals, valid = corner_values(ops, coeffs)
        lc = np.where(valid & is_admissible(cvals), max_wavespeed(cvals, eos), 0.0)
    lam = np.maximum(lam, np.nan_to_num(lc, nan=0.0).max(axis=1))
    if extra is not None:
        lam = np.maximum(lam, extra)
    return lam


def compute_dt(mesh: Mesh, ops: CellOperators, coeffs, eos: EosClosure, cfl: float, N: int,
               extra_speed=None, d: int = 2) -> float:
    lam = cell_wavespeed(ops, coeffs, eos, extra_speed)
    bad = ~np.isfinite(lam) | (lam <= 0)
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise TimeStepError(f"non-finite or zero wavespeed in cell {i}")
    return dt_formula(mesh.cell_area, mesh.cell_perimeter, lam, cfl, N, d)


def dt_formula(area, perimeter, lam, cfl, N, d=2) -> float:
    return float(np.min(cfl * np.asarray(area) / ((2 * N + 1) * d * np.asarray(lam) * np.asarray(perimeter))))


def predict(ops: CellOperators, coeffs, dt: float, eos: EosClosure, max_iter: int | None = None,
            tol: float = PREDICTOR_TOL) -> Predictor:
    """Fixed-point solve of the element-local space-time weak problem for all cells."""
    basis = ops.basis
    N = basis.N
    max_iter = 2 * (N + 1) + 2 if max_iter is None else max_iter
    nc = coeffs.shape[0]
    L = basis.n_st
    ext = np.zeros((nc, L, coeffs.shape[2]))
    r0 = basis.st_to_space >= 0
    ext[:, r0] = coeffs[:, basis.st_to_space[r0]]
    c = ext.copy()
    iters = np.zeros(nc, dtype=np.int64)
    incr = np.full(nc, np.inf)
    failed = np.zeros(nc, dtype=bool)
    active = np.arange(nc)
    with np.errstate(all="ignore"):
        for it in range(1, max_iter + 1):
            if len(active) == 0:
                break
            full = len(active) == nc
            sel = slice(None) if full else active  # skip gather copies while every cell iterates
            ca = c[sel]
            psi = ops.psi[sel]
            V = psi @ ca
            Vx = ops.psi_x[sel] @ ca
            Vy = ops.psi_y[sel] @ ca
            bad = ~np.all(is_admissible(V), axis=1)
            H = quasilinear(V, Vx, Vy, eos)
            cn = ext[sel] - dt * (ops.KW[sel] @ H)
            dV = psi @ (cn - ca)
            w = ops.st_w[sel][..., None]
            num = np.sqrt(np.sum(w * dV * dV, axis=(1, 2)))
            den = np.sqrt(np.sum(w * V * V, axis=(1, 2)))
            rel = num / np.maximum(den, 1e-300)
            bad |= ~np.isfinite(rel)
            c[active] = cn
            iters[active] = it
            incr[active] = rel
            failed[active[bad]] = True
            done = bad | (rel < tol)
            active = active[~done]
    failed[active] = True  # iteration cap reached
    c[failed] = ext[failed]
    return Predictor(c, iters, incr, failed)


def evaluate_predictor(ops: CellOperators, pred: Predictor, eos: EosClosure) -> None:
    """Fill pred.V and pred.H at the space-time volume points."""
    with np.errstate(all="ignore"):
        V = ops.psi @ pred.coeffs
        Vx = ops.psi_x @ pred.coeffs
        Vy = ops.psi_y @ pred.coeffs
        pred.V = V
        pred.H = quasilinear(V, Vx, Vy, eos)


def face_traces(ops: CellOperators, pred: Predictor, boundary: Boundary, t: float, dt: float):
    """Left/right traces (nf, nt, ne, 5) at face quadrature points and time nodes."""
    mesh = ops.mesh
    nf = mesh.n_faces
    nt, ne = ops.n_time, ops.n_edge
    vL = (ops.face_psiL @ pred.coeffs[mesh.face_left]).reshape(nf, nt, ne, 5)
    Rc = np.maximum(mesh.face_right, 0)
    vR = (ops.face_psiR @ pred.coeffs[Rc]).reshape(nf, nt, ne, 5)
    bf = mesh.face_right < 0
    if np.any(bf):
        bc = mesh.face_bc[bf][:, None]
        nrm = mesh.face_normal[bf][:, None, :]
        pts = ops.face_pts[bf]
        for k in range(nt):
            vR[bf, k] = boundary.ghost(vL[bf, k], bc, nrm, pts, t + ops.t_nodes[k] * dt)
    return vL, vR


def corrector(ops: CellOperators, coeffs, pred: Predictor, eos: EosClosure, boundary: Boundary,
              t: float, dt: float, record: bool = False):
    """Candidate coefficients at t + dt; optionally the face trace records of the step."""
    mesh = ops.mesh
    if pred.H is None:
        evaluate_predictor(ops, pred, eos)
    nc = mesh.n_cells
    nt, nq = ops.n_time, ops.n_vol
    with np.errstate(all="ignore"):
        Hbar = np.einsum("t,ctqm->cqm", ops.t_w, pred.H.reshape(nc, nt, nq, 5))
        vol = ops.phiW @ Hbar  # (nc, n, 5)
        vL, vR = face_traces(ops, pred, boundary, t, dt)
        nrm = mesh.face_normal[:, None, None, :]
        dm, dp = fluctuations(vL, vR, np.broadcast_to(nrm, vL.shape[:-1] + (2,)), eos)
        contL = ops.face_WL @ np.tensordot(ops.t_w, dm, axes=(0, 1))
        contR = ops.face_WR @ np.tensordot(ops.t_w, dp, axes=(0, 1))
        stack = np.concatenate([contL, contR, np.zeros((1,) + contL.shape[1:])])
        nf = mesh.n_faces
        idx = np.where(mesh.cell_faces < 0, 2 * nf,
                       np.where(mesh.cell_face_sign > 0, mesh.cell_faces, nf + mesh.cell_faces))
        face = stack[idx].sum(axis=1)
        cand = coeffs - dt * (ops.mass_inv @ (vol + face))
    traces = None
    if record:
        traces = (vL, vR, dt * ops.t_w[None, :, None] * ops.face_w[:, None, :])
    return cand, traces


def dg_face_records(mesh: Mesh, vL, vR, w, limited_mask) -> FaceTraces:
    """Flatten DG face traces; limited cells are excluded from the DG balances."""
    k = vL.shape[1] * vL.shape[2]
    L = np.repeat(mesh.face_left, k)
    R = np.repeat(mesh.face_right, k)
    cm = np.where(limited_mask[L], -1, L)
    cp = np.where((R < 0) | limited_mask[np.maximum(R, 0)], -1, R)
    return FaceTraces(vL.reshape(-1, 5), vR.reshape(-1, 5), np.repeat(mesh.face_normal, k, axis=0),
                      w.reshape(-1), cm, cp, R < 0)
