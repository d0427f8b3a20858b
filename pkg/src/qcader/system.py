"""Multi-material Euler system in primitive variables V = (rho, u, v, p, chi).

Single-phase Euler is the special case chi = 1, for which both closures give
gamma_tilde = gamma. All functions are vectorised over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import edge_rule

EPS_ADMISSIBLE = 1e-12
RHO, U, VV, P, CHI = range(5)
_S_RULE = edge_rule(5)  # 3-point Gauss-Legendre on the segment path


class AdmissibilityError(ValueError):
    """Non-positive density or pressure (or non-finite state)."""

    def __init__(self, msg, value=None):
        super().__init__(msg)
        self.value = value


@dataclass(frozen=True)
class EosClosure:
    """Closure A: lambda = chi/(gamma-1). Closure B: gamma_tilde = chi*gamma."""

    kind: str = "A"
    gamma: float = 1.4
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        if self.kind not in ("A", "B"):
            raise ValueError(f"unknown closure {self.kind!r}")

    def chi_of(self, gamma_j: float) -> float:
        """Marker value representing a material with adiabatic index gamma_j."""
        if self.kind == "A":
            return (self.gamma - 1.0) / (gamma_j - 1.0)
        return gamma_j / self.gamma

    @property
    def chi_range(self):
        gs = [g for g in (self.gamma1, self.gamma2) if g is not None] or [self.gamma]
        c = [self.chi_of(g) for g in gs]
        return min(c), max(c)

    def lam(self, chi):
        chi = np.asarray(chi, dtype=float)
        if self.kind == "A":
            return chi / (self.gamma - 1.0)
        return 1.0 / (chi * self.gamma - 1.0)

    def gamma_t(self, chi):
        chi = np.asarray(chi, dtype=float)
        if self.kind == "A":
            return 1.0 + (self.gamma - 1.0) / chi
        return chi * self.gamma

    def beta(self, p, chi):
        """d(rho E)/d(chi) at fixed rho, u, v, p."""
        if self.kind == "A":
            return np.asarray(p, dtype=float) / (self.gamma - 1.0) + 0.0 * chi
        lam = self.lam(chi)
        return -self.gamma * p * lam * lam


def _split(V):
    V = np.asarray(V, dtype=float)
    return V[..., 0], V[..., 1], V[..., 2], V[..., 3], V[..., 4]


def sound_speed(V, eos: EosClosure):
    rho, _, _, p, chi = _split(V)
    return np.sqrt(eos.gamma_t(chi) * p / rho)


def is_admissible(V) -> np.ndarray:
    """rho, p >= eps and all components finite (NaN counts as inadmissible)."""
    V = np.asarray(V, dtype=float)
    fin = np.all(np.isfinite(V), axis=-1)
    return fin & (V[..., 0] >= EPS_ADMISSIBLE) & (V[..., 3] >= EPS_ADMISSIBLE)


def prim_to_cons(V, eos: EosClosure):
    rho, u, v, p, chi = _split(V)
    kin = 0.5 * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, p * eos.lam(chi) + rho * kin, rho * chi], axis=-1)


def cons_to_prim(Q, eos: EosClosure, check: bool = True):
    Q = np.asarray(Q, dtype=float)
    rho = Q[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = Q[..., 1] / rho
        v = Q[..., 2] / rho
        chi = Q[..., 4] / rho
        p = (Q[..., 3] - 0.5 * rho * (u * u + v * v)) / eos.lam(chi)
    V = np.stack([rho, u, v, p, chi], axis=-1)
    if check:
        bad = ~is_admissible(V)
        if np.any(bad):
            k = np.argwhere(bad)[0]
            raise AdmissibilityError(f"inadmissible conservative state at index {tuple(k)}: {V[tuple(k)]}",
                                     V[tuple(k)])
    return V


def flux_prim(V, eos: EosClosure):
    """Physical flux columns (F, G) from primitive states."""
    rho, u, v, p, chi = _split(V)
    E = p * eos.lam(chi) + 0.5 * rho * (u * u + v * v)
    F = np.stack([rho * u, rho * u * u + p, rho * u * v, u * (E + p), rho * chi * u], axis=-1)
    G = np.stack([rho * v, rho * u * v, rho * v * v + p, v * (E + p), rho * chi * v], axis=-1)
    return F, G


def flux(Q, eos: EosClosure):
    """Flux tensor columns (F, G) of conservative states."""
    return flux_prim(cons_to_prim(Q, eos), eos)


def normal_flux(V, n, eos: EosClosure):
    F, G = flux_prim(V, eos)
    n = np.asarray(n, dtype=float)
    return F * n[..., 0:1] + G * n[..., 1:2]


def quasilinear(V, Vx, Vy, eos: EosClosure):
    """H = A_V dV/dx + B_V dV/dy without forming matrices."""
    rho, u, v, p, chi = _split(V)
    div = Vx[..., 1] + Vy[..., 2]
    ad = lambda k: u * Vx[..., k] + v * Vy[..., k]  # noqa: E731
    return np.stack([
        ad(0) + rho * div,
        ad(1) + Vx[..., 3] / rho,
        ad(2) + Vy[..., 3] / rho,
        ad(3) + eos.gamma_t(chi) * p * div,
        ad(4),
    ], axis=-1)


def jac_prim(V, n, eos: EosClosure):
    """A_V n_x + B_V n_y as (..., 5, 5)."""
    rho, u, v, p, chi = _split(V)
    n = np.asarray(n, dtype=float)
    nx, ny = n[..., 0], n[..., 1]
    un = u * nx + v * ny
    gp = eos.gamma_t(chi) * p
    shape = np.broadcast(rho, nx).shape
    A = np.zeros(shape + (5, 5))
    for k in range(5):
        A[..., k, k] = un
    A[..., 0, 1] = rho * nx
    A[..., 0, 2] = rho * ny
    A[..., 1, 3] = nx / rho
    A[..., 2, 3] = ny / rho
    A[..., 3, 1] = gp * nx
    A[..., 3, 2] = gp * ny
    return A


def eig_prim(V, n, eos: EosClosure):
    """Eigenvalues, right eigenvectors (columns) and left eigenvectors (rows) of jac_prim."""
    rho, u, v, p, chi = _split(V)
    n = np.asarray(n, dtype=float)
    nx, ny = n[..., 0], n[..., 1]
    with np.errstate(invalid="ignore"):
        c = sound_speed(V, eos)
    if not np.all(np.isfinite(c)):
        raise AdmissibilityError("non-finite sound speed")
    un = u * nx + v * ny
    shape = np.broadcast(rho, nx).shape
    lam = np.stack(np.broadcast_arrays(un - c, un, un, un, un + c), axis=-1)
    R = np.zeros(shape + (5, 5))
    Lm = np.zeros(shape + (5, 5))
    R[..., :, 0] = np.stack(np.broadcast_arrays(rho, -c * nx, -c * ny, rho * c * c, 0.0 * c), axis=-1)
    R[..., 0, 1] = 1.0
    R[..., 1, 2] = -ny
    R[..., 2, 2] = nx
    R[..., 4, 3] = 1.0
    R[..., :, 4] = np.stack(np.broadcast_arrays(rho, c * nx, c * ny, rho * c * c, 0.0 * c), axis=-1)
    Lm[..., 0, :] = np.stack(np.broadcast_arrays(0.0 * c, -nx / (2 * c), -ny / (2 * c), 1 / (2 * rho * c * c), 0.0 * c), axis=-1)
    Lm[..., 1, 0] = 1.0
    Lm[..., 1, 3] = -1.0 / (c * c)
    Lm[..., 2, 1] = -ny
    Lm[..., 2, 2] = nx
    Lm[..., 3, 4] = 1.0
    Lm[..., 4, :] = np.stack(np.broadcast_arrays(0.0 * c, nx / (2 * c), ny / (2 * c), 1 / (2 * rho * c * c), 0.0 * c), axis=-1)
    return lam, R, Lm


def Tinv(V, eos: EosClosure):
    """dQ/dV as (..., 5, 5)."""
    rho, u, v, p, chi = _split(V)
    T = np.zeros(rho.shape + (5, 5))
    T[..., 0, 0] = 1.0
    T[..., 1, 0] = u
    T[..., 1, 1] = rho
    T[..., 2, 0] = v
    T[..., 2, 2] = rho
    T[..., 3, :] = np.stack([0.5 * (u * u + v * v), rho * u, rho * v, eos.lam(chi), eos.beta(p, chi)], axis=-1)
    T[..., 4, 0] = chi
    T[..., 4, 4] = rho
    return T


def roe_avg_Tinv(V1, V2, eos: EosClosure):
    """Arithmetic-average transform with Q(V2) - Q(V1) = T @ (V2 - V1) exactly."""
    r1, u1, v1, p1, c1 = _split(V1)
    r2, u2, v2, p2, c2 = _split(V2)
    rb, ub, vb, pb, cb = 0.5 * (r1 + r2), 0.5 * (u1 + u2), 0.5 * (v1 + v2), 0.5 * (p1 + p2), 0.5 * (c1 + c2)
    kb = 0.25 * (u1 * u1 + v1 * v1 + u2 * u2 + v2 * v2)
    lb = 0.5 * (eos.lam(c1) + eos.lam(c2))
    if eos.kind == "A":
        bb = pb / (eos.gamma - 1.0) + 0.0 * cb
    else:
        bb = -eos.gamma * pb / ((eos.gamma_t(c1) - 1.0) * (eos.gamma_t(c2) - 1.0))
    T = np.zeros(rb.shape + (5, 5))
    T[..., 0, 0] = 1.0
    T[..., 1, 0] = ub
    T[..., 1, 1] = rb
    T[..., 2, 0] = vb
    T[..., 2, 2] = rb
    T[..., 3, :] = np.stack([kb, rb * ub, rb * vb, lb, bb], axis=-1)
    T[..., 4, 0] = cb
    T[..., 4, 4] = rb
    return T


def max_wavespeed(V, eos: EosClosure):
    rho, u, v, p, chi = _split(V)
    return np.hypot(u, v) + sound_speed(V, eos)


def _char_apply(V, dV, n, eos, lam_fn):
    """sum_k f(lambda_k) (l_k . dV) r_k at state V, analytic eigenbasis."""
    rho, u, v, p, chi = _split(V)
    nx, ny = n[..., 0], n[..., 1]
    c2 = eos.gamma_t(chi) * p / rho
    c = np.sqrt(c2)
    un = u * nx + v * ny
    dr, du, dv, dp, dc = (dV[..., k] for k in range(5))
    dun = du * nx + dv * ny
    dut = -du * ny + dv * nx
    w1 = -dun / (2 * c) + dp / (2 * rho * c2)
    w5 = dun / (2 * c) + dp / (2 * rho * c2)
    w2 = dr - dp / c2
    a = lam_fn(un - c) * w1
    e = lam_fn(un + c) * w5
    m = lam_fn(un)
    return np.stack([
        rho * (a + e) + m * w2,
        c * nx * (e - a) - m * ny * dut,
        c * ny * (e - a) + m * nx * dut,
        rho * c2 * (a + e),
        m * dc,
    ], axis=-1)


def _neg(x):
    return np.minimum(x, 0.0)


def _pos(x):
    return np.maximum(x, 0.0)


def fluctuations(vm, vp, n, eos: EosClosure):
    """(D^- dV, D^+ dV) along the segment path from vm to vp, dV = vp - vm.

    ``n`` points from the vm side to the vp side. The left cell receives the
    first term, the right cell the second. Both signs share the eigen data
    at each path node.
    """
    vm = np.asarray(vm, dtype=float)
    vp = np.asarray(vp, dtype=float)
    n = np.broadcast_to(np.asarray(n, dtype=float), vm.shape[:-1] + (2,))
    dV = vp - vm
    nx, ny = n[..., 0], n[..., 1]
    dr, du, dv, dpr, dc = (dV[..., k] for k in range(5))
    dun = du * nx + dv * ny
    dut = dv * nx - du * ny
    # per sign: rho (a+e), c (e-a), m w2, m, rho c^2 (a+e)
    acc = np.zeros((2, 5) + dV.shape[:-1])
    for s, w in zip(_S_RULE.points, _S_RULE.weights):
        Vs = vm + s * dV
        rho, u, v, p, chi = (Vs[..., k] for k in range(5))
        c2 = eos.gamma_t(chi) * p / rho
        c = np.sqrt(c2)
        un = u * nx + v * ny
        wp = dpr / (rho * c2)
        wu = dun / c
        w2 = dr - dpr / c2
        for j, f in enumerate((_neg, _pos)):
            a = f(un - c) * (wp - wu)
            e = f(un + c) * (wp + wu)
            m = w * f(un)
            ae = 0.5 * w * (a + e)
            acc[j, 0] += rho * ae
            acc[j, 1] += 0.5 * w * c * (e - a)
            acc[j, 2] += m * w2
            acc[j, 3] += m
            acc[j, 4] += rho * c2 * ae
    out = []
    for A in acc:
        out.append(np.stack([A[0] + A[2], nx * A[1] - ny * A[3] * dut, ny * A[1] + nx * A[3] * dut, A[4], A[3] * dc],
                            axis=-1))
    return out[0], out[1]


def path_dissipation(vm, vp, n, eos: EosClosure, part: str = "minus"):
    """Path-integrated matrix D_n^- (or D_n^+, |D_n| for part 'plus'/'abs')."""
    vm = np.asarray(vm, dtype=float)
    vp = np.asarray(vp, dtype=float)
    n = np.asarray(n, dtype=float)
    f = {"minus": _neg, "plus": _pos, "abs": np.abs}[part]
    D = 0.0
    for s, w in zip(_S_RULE.points, _S_RULE.weights):
        Vs = vm + s * (vp - vm)
        if not np.all(is_admissible(Vs)):
            raise AdmissibilityError("inadmissible state on the segment path")
        lam, R, L = eig_prim(Vs, n, eos)
        D = D + w * np.einsum("...ik,...k,...kj->...ij", R, f(lam), L)
    return D


def rusanov_prim(vm, vp, n, eos: EosClosure):
    """Rusanov flux from primitive traces."""
    n = np.asarray(n, dtype=float)
    fm = normal_flux(vm, n, eos)
    fp = normal_flux(vp, n, eos)
    s = np.maximum(max_wavespeed(vm, eos), max_wavespeed(vp, eos))[..., None]
    return 0.5 * (fm + fp) - 0.5 * s * (prim_to_cons(vp, eos) - prim_to_cons(vm, eos))


def rusanov_flux(qm, qp, n, eos: EosClosure):
    """Rusanov flux from conservative states."""
    return rusanov_prim(cons_to_prim(qm, eos), cons_to_prim(qp, eos), n, eos)
