"""Conservation defects, error norms, convergence tables and global budgets."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ader import FaceTraces
from .system import EosClosure, Tinv, fluctuations, normal_flux, rusanov_prim

VAR_NAMES = ("rho", "u", "v", "p", "chi")
CONS_NAMES = ("rho", "rhou", "rhov", "rhoE", "rhochi")


class DiagnosticUnavailable(RuntimeError):
    pass


def appendix_flux(vm, vp, n, eos: EosClosure):
    """Integrated flux: central physical flux minus T^-1(mean) |D_n| (vp - vm)."""
    vm = np.asarray(vm, dtype=float)
    vp = np.asarray(vp, dtype=float)
    n = np.broadcast_to(np.asarray(n, dtype=float), vm.shape[:-1] + (2,))
    dm, dp = fluctuations(vm, vp, n, eos)
    absd = dp - dm
    T = Tinv(0.5 * (vm + vp), eos)
    return 0.5 * (normal_flux(vm, n, eos) + normal_flux(vp, n, eos)) - 0.5 * np.einsum("...ij,...j->...i", T, absd)


def numerical_flux(name: str, vm, vp, n, eos: EosClosure):
    if name == "appendix":
        return appendix_flux(vm, vp, n, eos)
    if name == "rusanov":
        return rusanov_prim(vm, vp, n, eos)
    raise ValueError(f"unknown flux {name!r}")


@dataclass
class StepRecord:
    """What one step needs for the defect: cell integrals of Q at both levels and traces."""

    step: int
    t: float
    dt: float
    state: np.ndarray
    Qn: np.ndarray
    Qnp1: np.ndarray
    traces: FaceTraces


@dataclass
class DefectReport:
    delta: np.ndarray
    phi: np.ndarray
    scale: np.ndarray
    flux: str
    state: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return np.abs(self.delta) / np.maximum(self.scale, 1e-300)

    def sup(self, mask=None) -> np.ndarray:
        d = np.abs(self.delta) if mask is None else np.abs(self.delta[mask])
        return d.max(axis=0) if len(d) else np.zeros(5)


def compute_defect(record: StepRecord | None, area, eos: EosClosure, flux: str = "appendix") -> DefectReport:
    """Per-cell conservation defect of one recorded step with the chosen flux."""
    if record is None or record.traces is None:
        raise DiagnosticUnavailable("defect needs recorded traces (enable trace recording)")
    tr = record.traces
    area = np.asarray(area, dtype=float)
    nc = len(area)
    dt = record.dt
    with np.errstate(invalid="ignore"):  # inadmissible DG traces give NaN defects in their cells
        F = numerical_flux(flux, tr.vm, tr.vp, tr.n, eos)
    wF = tr.w[:, None] * F
    phi = np.zeros((nc, 5))
    mag = np.zeros((nc, 5))
    m = tr.cell_m >= 0
    p = tr.cell_p >= 0
    for k in range(5):
        phi[:, k] += np.bincount(tr.cell_m[m], weights=wF[m, k], minlength=nc)
        phi[:, k] -= np.bincount(tr.cell_p[p], weights=wF[p, k], minlength=nc)
        mag[:, k] += np.bincount(tr.cell_m[m], weights=np.abs(wF[m, k]), minlength=nc)
        mag[:, k] += np.bincount(tr.cell_p[p], weights=np.abs(wF[p, k]), minlength=nc)
    phi /= dt
    mag /= dt
    a = area[:, None]
    delta = (record.Qnp1 - record.Qn) / (a * dt) + phi / a
    scale = (np.abs(record.Qnp1) + np.abs(record.Qn)) / (a * dt) + mag / a
    return DefectReport(delta, phi, scale, flux, np.asarray(record.state))


def error_norms(ops, coeffs, exact) -> dict:
    """L1, L2, Linf errors of the primitive variables at the volume quadrature points."""
    vals = np.einsum("cql,clm->cqm", ops.phi, coeffs)
    ex = exact(ops.vol_pts)
    err = vals - ex
    w = ops.vol_w[..., None]
    valid = ops.vol_w > 0
    out = {}
    for k, name in enumerate(VAR_NAMES):
        e = err[..., k]
        out[name] = (float(np.sum(w[..., 0] * np.abs(e))), float(np.sqrt(np.sum(w[..., 0] * e * e))),
                     float(np.max(np.abs(e[valid]))))
    return out


@dataclass
class ConvergenceTable:
    h: np.ndarray
    errors: list
    orders: list = field(default_factory=list)

    def order(self, var: str = "rho", norm: int = 1) -> np.ndarray:
        return np.array([o[var][norm] for o in self.orders])

    def error(self, var: str = "rho", norm: int = 1) -> np.ndarray:
        return np.array([e[var][norm] for e in self.errors])


def observed_order(e1, e2, h1, h2) -> float:
    return float(np.log(e1 / e2) / np.log(h1 / h2))


def convergence(h, errors) -> ConvergenceTable:
    """Observed orders between consecutive runs; h must decrease strictly."""
    h = np.asarray(h, dtype=float)
    if len(h) < 2 or np.any(np.diff(h) >= 0):
        raise ValueError("convergence study needs >= 2 runs with strictly decreasing h")
    orders = []
    for i in range(1, len(h)):
        orders.append({v: tuple(observed_order(errors[i - 1][v][k], errors[i][v][k], h[i - 1], h[i])
                                for k in range(3)) for v in errors[i]})
    return ConvergenceTable(h, list(errors), orders)


def fit_slope(h, values) -> float:
    """Least-squares slope of log(values) against log(h)."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(values, float)), 1)[0])


def global_budget(records, eos: EosClosure, flux: str = "rusanov"):
    """Totals sum_i Q_i before every step and after the last, and per-step boundary flux integrals."""
    totals = [records[0].Qn.sum(axis=0)]
    bflux = []
    for rec in records:
        tr = rec.traces
        b = tr.boundary & (tr.cell_m >= 0)
        F = numerical_flux(flux, tr.vm[b], tr.vp[b], tr.n[b], eos)
        bflux.append((tr.w[b][:, None] * F).sum(axis=0))
        totals.append(rec.Qnp1.sum(axis=0))
    return np.array(totals), np.array(bflux)


def write_defect_csv(path, report: DefectReport) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "flag"] + [f"delta_{c}" for c in CONS_NAMES])
        for i, (f, d) in enumerate(zip(report.state, report.delta)):
            w.writerow([i, int(f)] + [repr(float(x)) for x in d])


def write_convergence_csv(path, table: ConvergenceTable) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["h"]
        for v in VAR_NAMES:
            head += [f"{v}_e_L1", f"{v}_e_L2", f"{v}_e_Linf", f"{v}_order_L1", f"{v}_order_L2", f"{v}_order_Linf"]
        w.writerow(head)
        for i, h in enumerate(table.h):
            row = [repr(float(h))]
            for v in VAR_NAMES:
                e = table.errors[i][v]
                o = table.orders[i - 1][v] if i > 0 else ("", "", "")
                row += [repr(x) for x in e] + [repr(x) if x != "" else "" for x in o]
            w.writerow(row)
