"""A-posteriori troubled-cell detection and subcell finite-volume recomputation.

Flag states: ok = 0, troubled = 1 (primitive subcell update), shock = 2
(conservative Rusanov subcell update).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ader import Discretization, FaceTraces, Predictor
from .basis import space_basis
from .mesh import Mesh
from .system import (cons_to_prim, fluctuations, is_admissible, prim_to_cons, quasilinear,
                     rusanov_flux, rusanov_prim, sound_speed)

OK, TROUBLED, SHOCK = 0, 1, 2
ORIGINS = ("none", "admissibility", "dmp", "sensor", "neighbor-extension", "predictor-failure")
O_NONE, O_ADM, O_DMP, O_SENSOR, O_EXT, O_PRED = range(6)
DMP_DELTA0 = 1e-4
DMP_EPS = 1e-3

__all__ = ["OK", "TROUBLED", "SHOCK", "ORIGINS", "LimiterState", "LimiterFailure", "detect", "sensor",
           "extend_flags", "eno_slopes", "recompute", "apply_limiter", "rusanov_flux", "rusanov_prim"]


class LimiterFailure(RuntimeError):
    """Subcell update stayed inadmissible after the first-order retry."""

    def __init__(self, msg, cells=None, states=None):
        super().__init__(msg)
        self.cells = cells
        self.states = states


@dataclass
class LimiterState:
    """Flags of the last step, consecutive-flag counters and stored subcell averages."""

    state: np.ndarray
    origin: np.ndarray
    counter: np.ndarray
    stored: np.ndarray
    has_stored: np.ndarray
    history: list = field(default_factory=list)

    @classmethod
    def empty(cls, n_cells: int, n_sub: int):
        return cls(np.zeros(n_cells, np.int8), np.zeros(n_cells, np.int8), np.zeros(n_cells, np.int64),
                   np.zeros((n_sub, 5)), np.zeros(n_cells, dtype=bool))


def _reduce_cells(values, offsets, how):
    starts = offsets[:-1]
    return how.reduceat(values, starts, axis=0)


def _face_other_traces(disc: Discretization, U, t: float):
    """Values on both sides of every subcell face (ghost states on the boundary)."""
    sg = disc.subcells
    va = U[sg.face_a]
    vb = U[np.maximum(sg.face_b, 0)]
    bnd = sg.face_b < 0
    if np.any(bnd):
        vb = vb.copy()
        vb[bnd] = disc.boundary.ghost(va[bnd], sg.face_bc[bnd], sg.face_normal[bnd], sg.face_mid[bnd], t)
    return va, vb


def sensor(disc: Discretization, U, t: float):
    """Compression sensor per subcell: (shock mask, undivided divergence, c_min)."""
    sg = disc.subcells
    ns = sg.n_sub
    va, vb = _face_other_traces(disc, U, t)
    n = sg.face_normal
    s = sg.face_length * ((va[:, 1] + vb[:, 1]) * n[:, 0] + (va[:, 2] + vb[:, 2]) * n[:, 1])
    inner = sg.face_b >= 0
    acc = np.bincount(sg.face_a, weights=s, minlength=ns)
    acc -= np.bincount(sg.face_b[inner], weights=s[inner], minlength=ns)
    div = sg.h / sg.area * acc
    with np.errstate(invalid="ignore"):
        cf = np.minimum(sound_speed(va, disc.eos), sound_speed(vb, disc.eos))
    cmin = cf[sg.sub_faces].min(axis=1)
    with np.errstate(invalid="ignore"):
        shock = div + disc.m1 * sg.h * cmin < 0.0
    return shock, div, cmin


def detect(disc: Discretization, U_star, U_n, pred_failed=None, t: float = 0.0):
    """Per-cell flag state and origin from candidate and t^n subcell averages."""
    mesh, sg = disc.mesh, disc.subcells
    nc = mesh.n_cells
    off = sg.offsets
    adm = ~_reduce_cells(is_admissible(U_star).astype(np.int8), off, np.minimum).astype(bool)

    lo_c = _reduce_cells(U_n, off, np.minimum)
    hi_c = _reduce_cells(U_n, off, np.maximum)
    nb = mesh.cell_neighbors
    nbi = np.where(nb >= 0, nb, np.arange(nc)[:, None])
    lo = np.minimum(lo_c, lo_c[nbi].min(axis=1))
    hi = np.maximum(hi_c, hi_c[nbi].max(axis=1))
    delta = np.maximum(DMP_DELTA0, DMP_EPS * (hi - lo))
    cell = sg.cell
    with np.errstate(invalid="ignore"):
        viol = np.any((U_star < lo[cell] - delta[cell]) | (U_star > hi[cell] + delta[cell]), axis=1)
    dmp = _reduce_cells(viol.astype(np.int8), off, np.maximum).astype(bool)

    sh_n = sensor(disc, U_n, t)[0]
    sh_s = sensor(disc, U_star, t)[0]
    shock = _reduce_cells((sh_n | sh_s).astype(np.int8), off, np.maximum).astype(bool)

    state = np.zeros(nc, np.int8)
    origin = np.zeros(nc, np.int8)
    if pred_failed is not None:
        pf = np.asarray(pred_failed, dtype=bool)
        state[pf], origin[pf] = TROUBLED, O_PRED
    state[dmp], origin[dmp] = TROUBLED, O_DMP
    state[adm], origin[adm] = TROUBLED, O_ADM
    sh = shock
    state[sh] = SHOCK
    origin[sh & (origin == O_NONE)] = O_SENSOR
    return state, origin


def extend_flags(state, origin, mesh: Mesh):
    """Vertex-neighbours of detected cells inherit their state (shock wins)."""
    state = np.asarray(state, dtype=np.int8)
    origin = np.asarray(origin, dtype=np.int8)
    src = np.where((state > 0) & (origin != O_EXT), state, 0).astype(np.int8)
    nb = mesh.cell_neighbors
    nbmax = np.where(nb >= 0, src[np.maximum(nb, 0)], 0).max(axis=1)
    new_state = state.copy()
    new_origin = origin.copy()
    grow = (src == 0) & (nbmax > state)
    new_state[grow] = nbmax[grow]
    new_origin[grow] = O_EXT
    return new_state, new_origin


def _eno_weights(disc: Discretization, sub, family: str):
    """Least-squares weights (k, ncand, nb) per candidate stencil; slopes are weights @ (U_j - U_0)."""
    mesh, sg = disc.mesh, disc.subcells
    nb = sg.neighbors[sub]
    valid = nb >= 0
    nbc = np.maximum(nb, 0)
    dX = sg.centroid[nbc] - sg.centroid[sub][:, None, :]
    tol = 1e-12 * sg.h[sub]
    cell = sg.cell[sub]
    cf = mesh.cell_faces[cell]
    fc = np.maximum(cf, 0)
    pn = mesh.face_normal[fc] * mesh.cell_face_sign[cell][..., None]  # (k, kmax, 2)
    rel = sg.centroid[nbc][:, None, :, :] - mesh.face_mid[fc][:, :, None, :]
    beyond = np.einsum("kfjd,kfd->kfj", rel, pn) > tol[:, None, None]
    keep = valid[:, None, :] & ~(beyond & (cf >= 0)[..., None])
    parts = [valid[:, None, :], keep]
    if family == "extended":
        nrm = sg.face_normal[sg.sub_faces[sub]] * sg.sub_face_sign[sub][..., None]  # (k, 3, 2)
        behind = np.einsum("kjd,kfd->kfj", dX, nrm) <= tol[:, None, None]
        parts.append(valid[:, None, :] & behind)
    elif family != "parent":
        raise ValueError(f"unknown ENO stencil family {family!r}")
    masks = np.concatenate(parts, axis=1).astype(float)  # (k, ncand, nb)
    dx, dy = dX[..., 0][:, None, :], dX[..., 1][:, None, :]
    axx = np.sum(masks * dx * dx, axis=2)
    axy = np.sum(masks * dx * dy, axis=2)
    ayy = np.sum(masks * dy * dy, axis=2)
    det = axx * ayy - axy * axy
    ok = (masks.sum(axis=2) >= 2) & (det > 1e-8 * np.maximum(axx * ayy, 1e-300))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / det, 0.0)[..., None]
        wx = masks * (ayy[..., None] * dx - axy[..., None] * dy) * inv
        wy = masks * (axx[..., None] * dy - axy[..., None] * dx) * inv
    return wx, wy, ok


def _eno_table(disc: Discretization, family: str):
    key = ("eno", family)
    tab = disc.cache.get(key)
    if tab is None:
        sg = disc.subcells
        wx, wy, ok = _eno_weights(disc, np.arange(sg.n_sub), family)
        tab = disc.cache[key] = (wx, wy, ok)
    return tab


def eno_slopes(disc: Discretization, U, sub, zero=None, family: str = "parent"):
    """ENO least-squares slopes (k, 5) for subcells ``sub``.

    Candidates: the plane through the full vertex-neighbour set and, for each
    face of the parent cell, the plane through the neighbours whose centroids
    do not lie beyond that face. ``family="extended"`` adds one half-stencil per
    subcell face. A candidate needs at least two neighbours (three subcells
    with the centre). Per variable the candidate with the smallest gradient
    norm wins.
    """
    sg = disc.subcells
    k = len(sub)
    if k == 0:
        return np.zeros((0, 5)), np.zeros((0, 5))
    wx_all, wy_all, ok_all = _eno_table(disc, family)
    wx, wy, ok = wx_all[sub], wy_all[sub], ok_all[sub]
    nbc = np.maximum(sg.neighbors[sub], 0)
    dU = U[nbc] - U[sub][:, None, :]
    sx = wx @ dU
    sy = wy @ dU
    norm = np.where(ok[..., None], sx * sx + sy * sy, np.inf)
    norm = np.where(np.isfinite(norm), norm, np.inf)
    best = np.argmin(norm, axis=1)[:, None, :]  # (k, 1, 5)
    has = np.isfinite(np.take_along_axis(norm, best, axis=1)[:, 0])
    Sx = np.where(has, np.take_along_axis(sx, best, axis=1)[:, 0], 0.0)
    Sy = np.where(has, np.take_along_axis(sy, best, axis=1)[:, 0], 0.0)
    if zero is not None:
        Sx[zero] = 0.0
        Sy[zero] = 0.0
    return Sx, Sy


def _dg_point_values(disc: Discretization, pred: Predictor, cells, pts, tau: float):
    """DG space-time predictor of ``cells`` at points ``pts`` and reference time tau."""
    mesh, basis = disc.mesh, disc.ops.basis
    phi = space_basis(basis, mesh.cell_center[cells], mesh.cell_h[cells], pts)[0]
    psi = phi[:, basis.st_space_part] * tau ** basis.r
    return np.einsum("kl,klm->km", psi, pred.coeffs[cells])


@dataclass
class SubcellResult:
    """Outcome of the subcell recomputation of one step."""

    sub: np.ndarray
    U_new: np.ndarray
    retried: np.ndarray
    traces: FaceTraces | None


def recompute(disc: Discretization, state, U_n, pred: Predictor, t: float, dt: float, record: bool = False):
    """MUSCL-Hancock subcell update of all flagged cells (primitive or conservative)."""
    mesh, sg, eos = disc.mesh, disc.subcells, disc.eos
    flagged = np.nonzero(state > 0)[0]
    sub = sg.cells_to_subcells(flagged)
    if len(sub) == 0:
        return SubcellResult(sub, np.zeros((0, 5)), np.zeros(0, dtype=np.int64), None)
    in_s = np.zeros(sg.n_sub, dtype=bool)
    in_s[sub] = True
    pos = np.full(sg.n_sub, -1, dtype=np.int64)
    pos[sub] = np.arange(len(sub))
    cons_sub = state[sg.cell[sub]] == SHOCK
    zero_cells = np.zeros(mesh.n_cells, dtype=bool)

    fa, fb = sg.face_a, sg.face_b
    fmask = in_s[fa] | ((fb >= 0) & in_s[np.maximum(fb, 0)])
    faces = np.nonzero(fmask)[0]
    a, b = fa[faces], fb[faces]
    xm = sg.face_mid[faces]
    nrm = sg.face_normal[faces]
    elen = sg.face_length[faces]
    a_in = in_s[a]
    b_in = (b >= 0) & in_s[np.maximum(b, 0)]
    bnd = b < 0
    # DG traces of ok neighbours at face midpoints, mid-time
    a_dg = ~a_in
    b_dg = (~b_in) & (~bnd)
    dg_a = _dg_point_values(disc, pred, sg.cell[a[a_dg]], xm[a_dg], 0.5) if a_dg.any() else None
    dg_b = _dg_point_values(disc, pred, sg.cell[b[b_dg]], xm[b_dg], 0.5) if b_dg.any() else None

    Qn = prim_to_cons(U_n[sub], eos)
    for attempt in range(2):
        zero = zero_cells[sg.cell[sub]]
        Sx, Sy = eno_slopes(disc, U_n, sub, zero, disc.eno)
        with np.errstate(all="ignore"):
            v_half = U_n[sub] - 0.5 * dt * quasilinear(U_n[sub], Sx, Sy, eos)
            va = np.empty((len(faces), 5))
            vb = np.empty((len(faces), 5))
            ia = pos[a[a_in]]
            va[a_in] = v_half[ia] + Sx[ia] * (xm[a_in, 0] - sg.centroid[a[a_in], 0])[:, None] \
                + Sy[ia] * (xm[a_in, 1] - sg.centroid[a[a_in], 1])[:, None]
            if dg_a is not None:
                va[a_dg] = dg_a
            ib = pos[b[b_in]]
            vb[b_in] = v_half[ib] + Sx[ib] * (xm[b_in, 0] - sg.centroid[b[b_in], 0])[:, None] \
                + Sy[ib] * (xm[b_in, 1] - sg.centroid[b[b_in], 1])[:, None]
            if dg_b is not None:
                vb[b_dg] = dg_b
            if bnd.any():
                vb[bnd] = disc.boundary.ghost(va[bnd], sg.face_bc[faces[bnd]], nrm[bnd], xm[bnd], t + 0.5 * dt)
            dm, dp = fluctuations(va, vb, nrm, eos)
            F = rusanov_prim(va, vb, nrm, eos)
            k = len(sub)
            acc_p = np.zeros((k, 5))
            acc_c = np.zeros((k, 5))
            pa = pos[a[a_in]]
            pb = pos[b[b_in]]
            for m in range(5):
                acc_p[:, m] += np.bincount(pa, weights=elen[a_in] * dm[a_in, m], minlength=k)
                acc_p[:, m] += np.bincount(pb, weights=elen[b_in] * dp[b_in, m], minlength=k)
                acc_c[:, m] += np.bincount(pa, weights=elen[a_in] * F[a_in, m], minlength=k)
                acc_c[:, m] -= np.bincount(pb, weights=elen[b_in] * F[b_in, m], minlength=k)
            area = sg.area[sub][:, None]
            v_prim = U_n[sub] - dt * quasilinear(v_half, Sx, Sy, eos) - dt / area * acc_p
            q_new = Qn - dt / area * acc_c
            v_cons = cons_to_prim(q_new, eos, check=False)
            U_new = np.where(cons_sub[:, None], v_cons, v_prim)
        bad = ~is_admissible(U_new)
        if not bad.any():
            break
        bad_cells = np.unique(sg.cell[sub[bad]])
        if attempt == 1 or np.all(zero_cells[bad_cells]):
            raise LimiterFailure(f"inadmissible subcell update in cells {bad_cells[:10].tolist()} at t={t:.6g}",
                                 bad_cells, U_new[bad])
        zero_cells[bad_cells] = True
    traces = None
    if record:
        on_parent = sg.face_parent[faces] >= 0
        cm = np.where(a_in, sg.cell[a], -1)
        cp = np.where(b_in, sg.cell[np.maximum(b, 0)], -1)
        sel = on_parent
        traces = FaceTraces(va[sel], vb[sel], nrm[sel], dt * elen[sel], cm[sel], cp[sel], bnd[sel])
    return SubcellResult(sub, U_new, np.nonzero(zero_cells)[0], traces)


def apply_limiter(disc: Discretization, candidate, state, U_full, lim: LimiterState):
    """Replace flagged cells by the reconstruction of their subcell averages.

    ``U_full`` holds the new subcell averages for flagged cells (other rows are
    ignored). Returns the final coefficients and updates ``lim`` in place.
    """
    ops, sg = disc.ops, disc.subcells
    out = np.array(candidate, copy=True)
    flagged = np.nonzero(state > 0)[0]
    if len(flagged):
        coeffs = ops.reconstruct(U_full, flagged)
        bad = ~np.all(np.isfinite(coeffs), axis=(1, 2))
        if bad.any():
            sub = sg.cells_to_subcells(flagged[bad])
            w = sg.area[sub][:, None] * U_full[sub]
            means = np.add.reduceat(w, _segment_starts(sg, flagged[bad]), axis=0)
            means /= disc.mesh.cell_area[flagged[bad]][:, None]
            coeffs[bad] = 0.0
            coeffs[bad, 0] = means
        out[flagged] = coeffs
        sub = sg.cells_to_subcells(flagged)
        lim.stored[sub] = U_full[sub]
    lim.counter = np.where(state > 0, lim.counter + 1, 0)
    lim.has_stored = state > 0
    lim.state = np.asarray(state, dtype=np.int8)
    return out


def _segment_starts(sg, cells):
    counts = sg.offsets[cells + 1] - sg.offsets[cells]
    return np.concatenate([[0], np.cumsum(counts)[:-1]])


def seed_averages(disc: Discretization, coeffs, lim: LimiterState):
    """t^n subcell averages: stored values where the cell was flagged last step, projection elsewhere."""
    U = disc.ops.project(coeffs)
    if lim.has_stored.any():
        sub = disc.subcells.cells_to_subcells(np.nonzero(lim.has_stored)[0])
        U[sub] = lim.stored[sub]
    return U

