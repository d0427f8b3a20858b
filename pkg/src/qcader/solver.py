"""Time loop: predictor, corrector, a-posteriori limiting and optional trace recording."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import limiter as lm
from .ader import Boundary, Discretization, FaceTraces, compute_dt, corrector, dg_face_records, evaluate_predictor, \
    predict
from .basis import BasisSet, CellOperators, project_field
from .cases import CaseSpec
from .diagnostics import StepRecord, compute_defect, error_norms
from .mesh import Mesh, build_subcells
from .quadrature import map_triangle, triangle_rule
from .system import AdmissibilityError, EosClosure, is_admissible, max_wavespeed, prim_to_cons

LIMITER_MODES = ("auto", "off", "all-shock", "all-troubled")


class RunAborted(RuntimeError):
    """Non-recoverable step failure; carries the step, the offending cells and their states."""

    def __init__(self, msg, step=None, t=None, cells=None, states=None):
        super().__init__(msg)
        self.step, self.t, self.cells, self.states = step, t, cells, states


@dataclass
class StepInfo:
    step: int
    t: float
    dt: float
    n_ok: int
    n_troubled: int
    n_shock: int
    pred_iterations: int
    pred_failed: int
    retried: int
    defect_appendix: np.ndarray | None = None
    defect_rusanov: np.ndarray | None = None


def subcell_quadrature_average(subcells, func, degree: int = 4):
    """Subcell averages of a pointwise function by quadrature on every subcell."""
    rule = triangle_rule(degree)
    v = subcells.verts
    pts, w = map_triangle(rule, v[:, 0], v[:, 1], v[:, 2])
    return np.einsum("sq,sqm->sm", w, func(pts)) / subcells.area[:, None]


class Solver:
    """Quasi-conservative ADER-DG solver with subcell limiting on one mesh."""

    def __init__(self, spec: CaseSpec, N: int, mesh: Mesh | None = None, h: float | None = None, *,
                 cfl: float = 0.5, cfl_warmup: float = 0.1, warmup_steps: int = 10, m1: float | None = None,
                 eos: EosClosure | None = None, limiter: str = "auto", record: bool = False,
                 keep_records: bool = False, eno: str = "parent", t_end: float | None = None):
        if N < 1:
            raise ValueError("polynomial degree N must be >= 1")
        if limiter not in LIMITER_MODES:
            raise ValueError(f"limiter must be one of {LIMITER_MODES}")
        self.spec = spec
        self.mesh = mesh if mesh is not None else spec.mesh(h)
        self.eos = eos if eos is not None else spec.eos
        self.N = N
        basis = BasisSet(N)
        sub = build_subcells(self.mesh, N)
        ops = CellOperators(self.mesh, sub, basis)
        self.disc = Discretization(self.mesh, sub, ops, self.eos, Boundary(spec.boundary_state()),
                                   spec.m1 if m1 is None else float(m1), eno)
        self.cfl, self.cfl_warmup, self.warmup_steps = cfl, cfl_warmup, warmup_steps
        self.limiter = limiter
        self.record = record or keep_records
        self.keep_records = keep_records
        self.t_end = spec.t_end if t_end is None else float(t_end)
        self.t = 0.0
        self.nstep = 0
        self.history: list[StepInfo] = []
        self.records: list[StepRecord] = []
        self.last_record: StepRecord | None = None
        self.wall = 0.0
        self.lim = lm.LimiterState.empty(self.mesh.n_cells, sub.n_sub)
        self.coeffs = self._initial_field()

    # ---- setup

    @property
    def ops(self):
        return self.disc.ops

    def _initial_field(self):
        """L2 projection of the IC; cells where it breaks admissibility or the DMP take exact subcell averages."""
        ops, sg = self.ops, self.disc.subcells
        ic = self.spec.ic
        pts_ok = is_admissible(ic(ops.vol_pts))
        if not np.all(pts_ok | (ops.vol_w[..., None] == 0)[..., 0]):
            raise RunAborted("initial condition is inadmissible at a quadrature point", 0, 0.0)
        coeffs = project_field(ops, ic)
        if self.limiter == "off":
            return coeffs
        U_ic = subcell_quadrature_average(sg, ic, max(2 * self.N, 4))
        U_proj = ops.project(coeffs)
        state, _ = lm.detect(self.disc, U_proj, U_ic, None, 0.0)
        bad = np.nonzero(state > 0)[0]
        if len(bad):
            coeffs[bad] = ops.reconstruct(U_ic, bad)
            sub = sg.cells_to_subcells(bad)
            self.lim.stored[sub] = U_ic[sub]
            self.lim.has_stored[bad] = True
        return coeffs

    # ---- helpers

    def subcell_averages(self):
        return lm.seed_averages(self.disc, self.coeffs, self.lim)

    def _extra_speed(self):
        if not self.lim.has_stored.any():
            return None
        sg = self.disc.subcells
        cells = np.nonzero(self.lim.has_stored)[0]
        sub = sg.cells_to_subcells(cells)
        lam = max_wavespeed(self.lim.stored[sub], self.eos)
        starts = lm._segment_starts(sg, cells)
        out = np.zeros(self.mesh.n_cells)
        out[cells] = np.maximum.reduceat(lam, starts)
        return out

    def _cell_integrals_dg(self, coeffs):
        ops = self.ops
        with np.errstate(all="ignore"):
            V = np.einsum("cql,clm->cqm", ops.phi, coeffs)
            Q = prim_to_cons(V, self.eos)
        return np.einsum("cq,cqm->cm", ops.vol_w, Q)

    def _cell_integrals_sub(self, U, cells):
        sg = self.disc.subcells
        sub = sg.cells_to_subcells(cells)
        Q = sg.area[sub][:, None] * prim_to_cons(U[sub], self.eos)
        return np.add.reduceat(Q, lm._segment_starts(sg, cells), axis=0)

    def next_dt(self) -> float:
        cfl = self.cfl_warmup if self.nstep < self.warmup_steps else self.cfl
        dt = compute_dt(self.mesh, self.ops, self.coeffs, self.eos, cfl, self.N, self._extra_speed())
        remaining = self.t_end - self.t
        if remaining > 0 and dt > remaining * (1 - 1e-12):
            dt = remaining
        return dt

    # ---- one step

    def step(self, dt: float | None = None) -> StepInfo:
        disc, ops, mesh, eos = self.disc, self.ops, self.mesh, self.eos
        t = self.t
        if dt is None:
            dt = self.next_dt()
        pred = predict(ops, self.coeffs, dt, eos)
        evaluate_predictor(ops, pred, eos)
        cand, tr = corrector(ops, self.coeffs, pred, eos, disc.boundary, t, dt, self.record)
        nc = mesh.n_cells
        retried = 0
        sub_traces = None
        if self.limiter == "off":
            state = np.zeros(nc, np.int8)
            new = cand
            U_n = None
            means = ops.project(new)
            bad = ~is_admissible(means)
            if bad.any():
                cells = np.unique(disc.subcells.cell[bad])
                raise RunAborted(f"inadmissible unlimited update at step {self.nstep + 1}, cells {cells[:10].tolist()}",
                                 self.nstep + 1, t, cells, means[bad])
        else:
            U_n = lm.seed_averages(disc, self.coeffs, self.lim)
            U_star = ops.project(cand)
            if self.limiter == "auto":
                state, origin = lm.detect(disc, U_star, U_n, pred.failed, t)
                state, origin = lm.extend_flags(state, origin, mesh)
            else:
                state = np.full(nc, lm.SHOCK if self.limiter == "all-shock" else lm.TROUBLED, np.int8)
                origin = np.zeros(nc, np.int8)
            try:
                res = lm.recompute(disc, state, U_n, pred, t, dt, self.record)
            except lm.LimiterFailure as exc:
                raise RunAborted(f"limiter failure at step {self.nstep + 1}: {exc}", self.nstep + 1, t,
                                 exc.cells, exc.states) from exc
            retried = len(res.retried)
            U_full = U_n.copy()
            U_full[res.sub] = res.U_new
            self.lim.origin = origin
            new = lm.apply_limiter(disc, cand, state, U_full, self.lim)
            sub_traces = res.traces
            ok = state == 0
            okm = ok[disc.subcells.cell]
            bad = okm & ~is_admissible(U_star)
            if bad.any() or not np.all(np.isfinite(new)):
                cells = np.unique(disc.subcells.cell[bad])
                raise RunAborted(f"inadmissible state after limiting at step {self.nstep + 1}", self.nstep + 1, t,
                                 cells, U_star[bad])
        info = StepInfo(self.nstep + 1, t + dt, dt, int(np.sum(state == 0)), int(np.sum(state == lm.TROUBLED)),
                        int(np.sum(state == lm.SHOCK)), int(pred.iterations.max()), int(pred.failed.sum()), retried)
        if self.record:
            rec = self._make_record(state, U_n, new, tr, sub_traces, dt)
            da = compute_defect(rec, mesh.cell_area, eos, "appendix")
            dr = compute_defect(rec, mesh.cell_area, eos, "rusanov")
            info.defect_appendix = da.sup()
            info.defect_rusanov = dr.sup()
            self.last_record = rec
            if self.keep_records:
                self.records.append(rec)
        self.coeffs = new
        self.t = t + dt
        self.nstep += 1
        self.history.append(info)
        return info

    def _make_record(self, state, U_n, new, tr, sub_traces, dt) -> StepRecord:
        limited = state > 0
        Qn = self._cell_integrals_dg(self.coeffs)
        Qnp1 = self._cell_integrals_dg(new)
        cells = np.nonzero(limited)[0]
        if len(cells):
            Qn[cells] = self._cell_integrals_sub(U_n, cells)
            Qnp1[cells] = self._cell_integrals_sub(self.lim.stored, cells)
        vL, vR, w = tr
        traces = FaceTraces.concat([dg_face_records(self.mesh, vL, vR, w, limited), sub_traces])
        return StepRecord(self.nstep + 1, self.t, dt, np.asarray(state, np.int8).copy(), Qn, Qnp1, traces)

    # ---- driver

    def run(self, t_end: float | None = None, max_steps: int | None = None, callback=None):
        if t_end is not None:
            self.t_end = float(t_end)
        start = time.perf_counter()
        try:
            while self.t < self.t_end * (1 - 1e-14) and (max_steps is None or self.nstep < max_steps):
                info = self.step()
                if callback is not None:
                    callback(self, info)
        finally:
            self.wall += time.perf_counter() - start
        return self.history

    def errors(self, t: float | None = None):
        if self.spec.exact is None:
            raise ValueError(f"case {self.spec.name} has no exact solution")
        t = self.t if t is None else t
        return error_norms(self.ops, self.coeffs, lambda pts: self.spec.exact(pts, t))

    def flag_counts(self) -> np.ndarray:
        return np.array([[s.n_ok, s.n_troubled, s.n_shock] for s in self.history], dtype=np.int64).reshape(-1, 3)


__all__ = ["Solver", "StepInfo", "RunAborted", "LIMITER_MODES", "AdmissibilityError", "subcell_quadrature_average"]
