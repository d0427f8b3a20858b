"""Benchmark registry, exact 1-D Riemann solver and the radial reference solver."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np

from .mesh import Mesh, generate_rect_mesh, read_mesh
from .system import EosClosure

GAMMA = 1.4


class UnknownCase(KeyError):
    pass


class RiemannVacuum(ValueError):
    pass


@dataclass(frozen=True)
class CaseSpec:
    """Everything needed to set up one benchmark.

    ``ic(pts)`` and ``exact(pts, t)`` map (..., 2) points to (..., 5)
    primitive states. ``tags`` maps rectangle sides to boundary tags, or is
    None for cases that ship a mesh file.
    """

    name: str
    domain: str
    ic: Callable
    eos: EosClosure
    t_end: float
    m1: float
    bounds: tuple | None = None
    tags: dict | None = None
    mesh_file: str | None = None
    orders: tuple = (2,)
    h_values: tuple = ()
    exact: Callable | None = None
    dirichlet: Callable | None = None
    oracle: str | None = None
    params: dict = field(default_factory=dict)

    @property
    def multi_material(self) -> bool:
        return self.m1 != 1.0

    def boundary_state(self):
        """Dirichlet ghost function ``(pts, t) -> states``."""
        if self.dirichlet is not None:
            return self.dirichlet
        ic = self.ic
        return lambda pts, t: ic(pts)

    def mesh(self, h: float | None = None, perturb: float = 0.0, seed: int = 0) -> Mesh:
        return mesh_for_case(self, h, perturb, seed)


def _states(mask, a, b):
    """Pick state a where mask holds, b elsewhere, with shape mask.shape + (5,)."""
    return np.where(mask[..., None], np.asarray(a, float), np.asarray(b, float))


def _x(pts):
    return np.asarray(pts, dtype=float)[..., 0]


# ---------------------------------------------------------------- vortex

def _vortex_ic(eps: float = 5.0, gamma: float = GAMMA, center=(5.0, 5.0)):
    def ic(pts):
        pts = np.asarray(pts, dtype=float)
        dx = pts[..., 0] - center[0]
        dy = pts[..., 1] - center[1]
        r2 = dx * dx + dy * dy
        dT = -(gamma - 1.0) * eps ** 2 / (8.0 * gamma * math.pi ** 2) * np.exp(1.0 - r2)
        rho = (1.0 + dT) ** (1.0 / (gamma - 1.0))
        p = (1.0 + dT) ** (gamma / (gamma - 1.0))
        a = eps / (2.0 * math.pi) * np.exp(0.5 * (1.0 - r2))
        return np.stack([rho, -a * dy, a * dx, p, np.ones_like(rho)], axis=-1)
    return ic


def _shu_vortex(**kw) -> CaseSpec:
    eps = float(kw.get("eps", 5.0))
    ic = _vortex_ic(eps)
    return CaseSpec("shu-vortex", "[-20,30]^2", ic, EosClosure("A", GAMMA), 1.0, 1.0,
                    bounds=(-20.0, 30.0, -20.0, 30.0), tags={}, orders=(1, 2),
                    h_values=(1.15, 0.738, 0.473), exact=lambda pts, t: ic(pts), params={"eps": eps})


# ---------------------------------------------------------------- shock tubes

def planar_shock_states(M: float, gamma: float = GAMMA):
    """(left, right) primitive states of a right-moving shock of Mach M into (gamma, 0, 0, 1)."""
    cR = 1.0
    drho = M * M * (gamma + 1.0) / (2.0 + M * M * (gamma - 1.0))
    dp = (2.0 * gamma * M * M - gamma + 1.0) / (gamma + 1.0)
    du = 2.0 * (M - 1.0 / M) / (gamma + 1.0) * cR
    return np.array([gamma * drho, du, 0.0, dp, 1.0]), np.array([gamma, 0.0, 0.0, 1.0, 1.0])


def _planar_shock(**kw) -> CaseSpec:
    M = float(kw.get("M", kw.get("mach", 5.0)))
    left, right = planar_shock_states(M)
    x0 = 0.2

    def exact(pts, t):
        return _states(_x(pts) <= x0 + M * t, left, right)

    return CaseSpec("planar-shock", "[0,1.2]x[0,0.1]", lambda pts: exact(pts, 0.0), EosClosure("A", GAMMA),
                    0.04, 1.0, bounds=(0.0, 1.2, 0.0, 0.1),
                    tags={"left": "dirichlet", "right": "dirichlet"}, orders=(2,), h_values=(1 / 90,),
                    exact=exact, dirichlet=exact, params={"M": M, "left": left, "right": right, "x0": x0})


def _riemann_case(name, left, right, x0, t_end, bounds, tags, h_values, **extra) -> CaseSpec:
    left = np.asarray(left, float)
    right = np.asarray(right, float)

    def exact(pts, t):
        x = _x(pts) - x0
        if t <= 0:
            return _states(x <= 0, left, right)
        with np.errstate(divide="ignore", invalid="ignore"):
            return exact_riemann_1d(left, right, GAMMA, x / t)

    return CaseSpec(name, extra.pop("domain"), lambda pts: _states(_x(pts) <= x0, left, right),
                    EosClosure("A", GAMMA), t_end, 1.0, bounds=bounds, tags=tags, orders=(2,),
                    h_values=h_values, exact=exact, oracle="exact-riemann",
                    params={"left": left, "right": right, "x0": x0, **extra})


def _lax(**kw) -> CaseSpec:
    return _riemann_case("lax", [0.445, 0.698, 0.0, 3.528, 1.0], [0.5, 0.0, 0.0, 0.571, 1.0], 0.5, 0.14,
                         (0.0, 1.0, 0.0, 0.1), {"left": "outflow", "right": "outflow"}, (1 / 200,),
                         domain="[0,1]x[0,0.1]")


def _sod_circular(**kw) -> CaseSpec:
    inner = np.array([1.0, 0.0, 0.0, 1.0, 1.0])
    outer = np.array([0.125, 0.0, 0.0, 0.1, 1.0])
    rd = 0.5

    def ic(pts):
        pts = np.asarray(pts, float)
        return _states(np.hypot(pts[..., 0], pts[..., 1]) <= rd, inner, outer)

    return CaseSpec("sod-circular", "[-1,1]^2", ic, EosClosure("A", GAMMA), 0.25, 1.0,
                    bounds=(-1.0, 1.0, -1.0, 1.0), tags={}, orders=(2,), h_values=(1 / 50, 1 / 100),
                    oracle="radial", params={"inner": inner, "outer": outer, "r0": rd})


def _blast_wc(**kw) -> CaseSpec:
    def ic(pts):
        x = _x(pts)
        p = np.where(x <= 0.1, 1000.0, np.where(x <= 0.9, 0.01, 100.0))
        one = np.ones_like(x)
        return np.stack([one, 0 * x, 0 * x, p, one], axis=-1)

    return CaseSpec("blast-wc", "[0,1]x[0,0.1]", ic, EosClosure("A", GAMMA), 0.038, 1.0,
                    bounds=(0.0, 1.0, 0.0, 0.1), tags={}, orders=(2,), h_values=(1 / 100,))


# ---------------------------------------------------------------- demo cases with mesh files

def _ffs(**kw) -> CaseSpec:
    state = np.array([GAMMA, 3.0, 0.0, 1.0, 1.0])

    def ic(pts):
        return np.broadcast_to(state, np.shape(pts)[:-1] + (5,)).copy()

    return CaseSpec("ffs", "[0,3]x[0,1] minus step [0.6,3]x[0,0.2]", ic, EosClosure("A", GAMMA), 4.0, 1.0,
                    mesh_file="ffs.mesh", orders=(2,), params={"t_alt": 2.5})


def _dmr(**kw) -> CaseSpec:
    left = np.array([8.0, 8.25, 0.0, 116.5, 1.0])
    right = np.array([GAMMA, 0.0, 0.0, 1.0, 1.0])
    speed = 10.0

    def exact(pts, t):
        return _states(_x(pts) <= speed * t, left, right)

    return CaseSpec("dmr", "polygon (-2,0),(0,0),(3,sqrt3),(3,2),(-2,2)", lambda pts: exact(pts, 0.0),
                    EosClosure("A", GAMMA), 0.2, 1.0, mesh_file="dmr.mesh", orders=(2,), dirichlet=exact,
                    params={"left": left, "right": right})


# ---------------------------------------------------------------- multi-material

def _quirk_karni(**kw) -> CaseSpec:
    eos = EosClosure(kw.get("eos", "B"), GAMMA, GAMMA, 5.0 / 3.0)
    chi_he = eos.chi_of(5.0 / 3.0)
    post = np.array([1.3765, 0.3948, 0.0, 1.57, 1.0])
    bubble = np.array([0.138, 0.0, 0.0, 1.0, chi_he])
    air = np.array([1.0, 0.0, 0.0, 1.0, 1.0])

    def ic(pts):
        x = _x(pts)
        out = _states(x <= 0.2, post, air)
        return np.where(((x >= 0.4) & (x <= 0.6))[..., None], bubble, out)

    return CaseSpec("quirk-karni", "[0,1]x[0,0.05]", ic, eos, 0.35, 15.0, bounds=(0.0, 1.0, 0.0, 0.05),
                    tags={"left": "dirichlet", "right": "dirichlet"}, orders=(2,), h_values=(1 / 270,),
                    params={"post": post, "bubble": bubble, "air": air, "x_shock": 0.2,
                            "bubble_range": (0.4, 0.6)})


def _shock_bubble(**kw) -> CaseSpec:
    eos = EosClosure(kw.get("eos", "B"), GAMMA, GAMMA, 1.648)
    pre = np.array([1.0, 0.0, 0.0, 1.0 / GAMMA, 1.0])
    post = np.array([1.3764, -0.3336, 0.0, 1.5698 / GAMMA, 1.0])
    bubble = np.array([0.1819, 0.0, 0.0, 1.0 / GAMMA, eos.chi_of(1.648)])
    center, radius, xs = (3.5, 0.0), float(kw.get("radius", 0.5)), 4.5

    def ic(pts):
        pts = np.asarray(pts, float)
        out = _states(pts[..., 0] > xs, post, pre)
        inside = np.hypot(pts[..., 0] - center[0], pts[..., 1] - center[1]) <= radius
        return np.where(inside[..., None], bubble, out)

    return CaseSpec("shock-bubble", "[0,7]x[-0.89,0.89]", ic, eos, 2.731, 15.0,
                    bounds=(0.0, 7.0, -0.89, 0.89), tags={"left": "dirichlet", "right": "dirichlet"},
                    orders=(2,), h_values=(1 / 30,),
                    params={"pre": pre, "post": post, "bubble": bubble, "center": center, "radius": radius,
                            "x_shock": xs, "mach": 1.22})


def _contact_1d(**kw) -> CaseSpec:
    kind = kw.get("eos", "A")
    profile = kw.get("profile", "smooth")
    g1, g2 = 1.4, 1.67
    eos = EosClosure(kind, GAMMA, g1, g2)
    c1, c2 = eos.chi_of(g1), eos.chi_of(g2)
    u0, p0 = 1.0, 1.0

    def at(x):
        if profile == "smooth":
            s = np.sin(2.0 * math.pi * x)
            rho = 1.0 + 0.5 * s
            chi = 0.5 * (c1 + c2) + 0.5 * (c1 - c2) * s
        elif profile == "jump":
            inside = (x >= 0.3) & (x <= 0.6)
            rho = np.where(inside, 0.25, 1.0)
            chi = np.where(inside, c2, c1)
        else:
            raise ValueError(f"unknown contact profile {profile!r}")
        return np.stack([rho, u0 + 0 * x, 0 * x, p0 + 0 * x, chi], axis=-1)

    def exact(pts, t):
        return at(_x(pts) - u0 * t)

    return CaseSpec("contact-1d", "[0,1]x[0,0.1]", lambda pts: exact(pts, 0.0), eos, 0.2, 15.0,
                    bounds=(0.0, 1.0, 0.0, 0.1), tags={"left": "dirichlet", "right": "outflow"},
                    orders=(1, 2), h_values=(1 / 30, 1 / 60, 1 / 120), exact=exact, dirichlet=exact,
                    params={"profile": profile, "u0": u0, "p0": p0})


_REGISTRY = {
    "shu-vortex": _shu_vortex,
    "planar-shock": _planar_shock,
    "lax": _lax,
    "sod-circular": _sod_circular,
    "blast-wc": _blast_wc,
    "ffs": _ffs,
    "dmr": _dmr,
    "quirk-karni": _quirk_karni,
    "shock-bubble": _shock_bubble,
    "contact-1d": _contact_1d,
}

CASE_NAMES = tuple(_REGISTRY)


def case(name: str, **params) -> CaseSpec:
    """Look up a benchmark; ``planar-shock(10)`` sets the Mach number inline."""
    m = re.fullmatch(r"\s*([a-z0-9-]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*", name)
    if m is None or m.group(1) not in _REGISTRY:
        raise UnknownCase(f"unknown case {name!r}; registered: {', '.join(CASE_NAMES)}")
    key = m.group(1)
    if m.group(2) is not None:
        if key != "planar-shock":
            raise UnknownCase(f"case {key!r} takes no inline parameter")
        params = {**params, "M": float(m.group(2))}
    spec = _REGISTRY[key](**params)
    kind = params.get("eos")
    if kind is not None and spec.eos.kind != kind:
        # single-material cases carry chi = 1, where both closures coincide
        spec = replace(spec, eos=EosClosure(kind, spec.eos.gamma, spec.eos.gamma1, spec.eos.gamma2))
    if "t_end" in params:
        spec = replace(spec, t_end=float(params["t_end"]))
    return spec


def mesh_for_case(spec: CaseSpec, h: float | None = None, perturb: float = 0.0, seed: int = 0) -> Mesh:
    """Mesh whose cells have characteristic length (radius of gyration) h.

    The right-triangle lattice has radius of gyration spacing/3, so the
    generator runs with spacing 3h.
    """
    if spec.mesh_file is not None:
        return load_data_mesh(spec.mesh_file)
    if h is None:
        if not spec.h_values:
            raise ValueError(f"case {spec.name} needs an explicit h")
        h = spec.h_values[0]
    return generate_rect_mesh(spec.bounds, 3.0 * h, perturb=perturb, seed=seed, tags=spec.tags)


@lru_cache(maxsize=None)
def load_data_mesh(name: str) -> Mesh:
    with resources.as_file(resources.files("qcader") / "data" / name) as p:
        return read_mesh(p)


# ---------------------------------------------------------------- exact Riemann solver

def _pressure_function(p, W, gamma):
    """Toro's f_K(p) and its derivative for side state W = (rho, u, p)."""
    rho, _, pk = W
    c = math.sqrt(gamma * pk / rho)
    if p > pk:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        s = math.sqrt(A / (p + B))
        return (p - pk) * s, s * (1.0 - 0.5 * (p - pk) / (p + B))
    r = p / pk
    f = 2.0 * c / (gamma - 1.0) * (r ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * c) * r ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def riemann_star(left, right, gamma: float = GAMMA, tol: float = 1e-14, max_iter: int = 100):
    """Star-region pressure and velocity (p*, u*) by Newton iteration."""
    WL = _rup(left)
    WR = _rup(right)
    cL = math.sqrt(gamma * WL[2] / WL[0])
    cR = math.sqrt(gamma * WR[2] / WR[0])
    du = WR[1] - WL[1]
    if 2.0 * (cL + cR) / (gamma - 1.0) <= du:
        raise RiemannVacuum("initial data generate vacuum")
    p = max(tol, 0.5 * (WL[2] + WR[2]) - 0.125 * du * (WL[0] + WR[0]) * (cL + cR))
    for _ in range(max_iter):
        fL, dL = _pressure_function(p, WL, gamma)
        fR, dR = _pressure_function(p, WR, gamma)
        pn = p - (fL + fR + du) / (dL + dR)
        if pn <= 0:
            pn = 0.5 * p
        change = abs(pn - p) / (0.5 * (pn + p))
        p = pn
        if change < tol:
            break
    else:
        raise RuntimeError("Riemann pressure iteration did not converge")
    fL, _ = _pressure_function(p, WL, gamma)
    fR, _ = _pressure_function(p, WR, gamma)
    return p, 0.5 * (WL[1] + WR[1]) + 0.5 * (fR - fL)


def _rup(V):
    V = np.asarray(V, dtype=float)
    if V.shape[-1] == 5:
        return float(V[0]), float(V[1]), float(V[3])
    return float(V[0]), float(V[1]), float(V[2])


def riemann_waves(left, right, gamma: float = GAMMA) -> dict:
    """Star state and wave speeds: shock speeds or rarefaction head/tail speeds per side."""
    rL, uL, pL = _rup(left)
    rR, uR, pR = _rup(right)
    ps, us = riemann_star(left, right, gamma)
    g = gamma
    out = {"p_star": ps, "u_star": us, "contact": us}
    cL = math.sqrt(g * pL / rL)
    cR = math.sqrt(g * pR / rR)
    if ps > pL:
        out["rho_star_left"] = rL * (ps / pL + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ps / pL + 1)
        out["left_shock"] = uL - cL * math.sqrt((g + 1) / (2 * g) * ps / pL + (g - 1) / (2 * g))
    else:
        out["rho_star_left"] = rL * (ps / pL) ** (1 / g)
        out["left_head"] = uL - cL
        out["left_tail"] = us - cL * (ps / pL) ** ((g - 1) / (2 * g))
    if ps > pR:
        out["rho_star_right"] = rR * (ps / pR + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ps / pR + 1)
        out["right_shock"] = uR + cR * math.sqrt((g + 1) / (2 * g) * ps / pR + (g - 1) / (2 * g))
    else:
        out["rho_star_right"] = rR * (ps / pR) ** (1 / g)
        out["right_head"] = uR + cR
        out["right_tail"] = us + cR * (ps / pR) ** ((g - 1) / (2 * g))
    return out


def exact_riemann_1d(left, right, gamma: float, xi):
    """Exact ideal-gas Riemann solution sampled at xi = x/t.

    States are (rho, u, p) or full primitive 5-vectors; in the latter case the
    transverse velocity and the marker are carried by the contact.
    """
    left = np.asarray(left, float)
    right = np.asarray(right, float)
    full = left.shape[-1] == 5
    xi = np.asarray(xi, dtype=float)
    rL, uL, pL = _rup(left)
    rR, uR, pR = _rup(right)
    w = riemann_waves(left, right, gamma)
    ps, us = w["p_star"], w["u_star"]
    g = gamma
    cL = math.sqrt(g * pL / rL)
    cR = math.sqrt(g * pR / rR)
    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    p = np.empty_like(xi)
    leftside = xi <= us

    # left of the contact
    if ps > pL:
        pre = leftside & (xi <= w["left_shock"])
        star = leftside & ~pre
        rho[pre], u[pre], p[pre] = rL, uL, pL
        rho[star], u[star], p[star] = w["rho_star_left"], us, ps
    else:
        pre = leftside & (xi <= w["left_head"])
        star = leftside & (xi >= w["left_tail"])
        fan = leftside & ~pre & ~star
        rho[pre], u[pre], p[pre] = rL, uL, pL
        rho[star], u[star], p[star] = w["rho_star_left"], us, ps
        s = xi[fan]
        c = 2.0 / (g + 1) + (g - 1) / ((g + 1) * cL) * (uL - s)
        rho[fan] = rL * c ** (2 / (g - 1))
        u[fan] = 2.0 / (g + 1) * (cL + (g - 1) / 2 * uL + s)
        p[fan] = pL * c ** (2 * g / (g - 1))
    rs = ~leftside
    if ps > pR:
        pre = rs & (xi >= w["right_shock"])
        star = rs & ~pre
        rho[pre], u[pre], p[pre] = rR, uR, pR
        rho[star], u[star], p[star] = w["rho_star_right"], us, ps
    else:
        pre = rs & (xi >= w["right_head"])
        star = rs & (xi <= w["right_tail"])
        fan = rs & ~pre & ~star
        rho[pre], u[pre], p[pre] = rR, uR, pR
        rho[star], u[star], p[star] = w["rho_star_right"], us, ps
        s = xi[fan]
        c = 2.0 / (g + 1) - (g - 1) / ((g + 1) * cR) * (uR - s)
        rho[fan] = rR * c ** (2 / (g - 1))
        u[fan] = 2.0 / (g + 1) * (-cR + (g - 1) / 2 * uR + s)
        p[fan] = pR * c ** (2 * g / (g - 1))
    if not full:
        return np.stack([rho, u, p], axis=-1)
    v = np.where(leftside, left[2], right[2])
    chi = np.where(leftside, left[4], right[4])
    return np.stack([rho, u, v, p, chi], axis=-1)


# ---------------------------------------------------------------- radial reference

@dataclass
class RadialProfile:
    r: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    t: float

    def sample(self, r):
        return (np.interp(r, self.r, self.rho), np.interp(r, self.r, self.u), np.interp(r, self.r, self.p))


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def radial_reference(t: float = 0.25, n_cells: int = 10000, r_max: float = 1.5, inner=(1.0, 0.0, 1.0),
                     outer=(0.125, 0.0, 0.1), r0: float = 0.5, gamma: float = GAMMA, cfl: float = 0.45,
                     alpha: float = 1.0) -> RadialProfile:
    """Cylindrical Riemann problem on r in [0, r_max] with a 1-D MUSCL-Rusanov-RK2 solver.

    The conservative 1-D system carries the geometric source -(alpha/r)(rho u, rho u^2, u(E+p)).
    Symmetry at r = 0, transmissive at r_max.
    """
    dr = r_max / n_cells
    r = (np.arange(n_cells) + 0.5) * dr
    W = np.where((r <= r0)[:, None], np.asarray(inner, float), np.asarray(outer, float))
    U = np.stack([W[:, 0], W[:, 0] * W[:, 1], W[:, 2] / (gamma - 1) + 0.5 * W[:, 0] * W[:, 1] ** 2], axis=1)

    def prim(U):
        rho = U[:, 0]
        u = U[:, 1] / rho
        p = (gamma - 1) * (U[:, 2] - 0.5 * rho * u * u)
        return rho, u, p

    def rhs(U):
        rho, u, p = prim(U)
        Wp = np.stack([rho, u, p], axis=1)
        mirror = Wp[1::-1] * [1.0, -1.0, 1.0]
        G = np.concatenate([mirror, Wp, Wp[-1:], Wp[-1:]])  # two ghosts each side
        s = _minmod(G[1:-1] - G[:-2], G[2:] - G[1:-1])
        WLf = G[1:-2] + 0.5 * s[:-1]   # left state at interfaces i-1/2, i = 0..n
        WRf = G[2:-1] - 0.5 * s[1:]

        def cons_flux(Wf):
            rr, uu, pp = Wf[:, 0], Wf[:, 1], Wf[:, 2]
            E = pp / (gamma - 1) + 0.5 * rr * uu * uu
            return np.stack([rr, rr * uu, E], axis=1), np.stack([rr * uu, rr * uu * uu + pp, uu * (E + pp)], axis=1), \
                np.abs(uu) + np.sqrt(gamma * pp / rr)

        QL, FL, aL = cons_flux(WLf)
        QR, FR, aR = cons_flux(WRf)
        a = np.maximum(aL, aR)[:, None]
        F = 0.5 * (FL + FR) - 0.5 * a * (QR - QL)
        E = p / (gamma - 1) + 0.5 * rho * u * u
        src = -alpha / r[:, None] * np.stack([rho * u, rho * u * u, u * (E + p)], axis=1)
        return -(F[1:] - F[:-1]) / dr + src, float(np.max(a))

    time = 0.0
    while time < t - 1e-14:
        k1, amax = rhs(U)
        dt = min(cfl * dr / amax, t - time)
        U1 = U + dt * k1
        k2, _ = rhs(U1)
        U = 0.5 * (U + U1 + dt * k2)
        time += dt
    rho, u, p = prim(U)
    return RadialProfile(r, rho, u, p, t)


@lru_cache(maxsize=4)
def sod_reference(t: float = 0.25, n_cells: int = 10000) -> RadialProfile:
    return radial_reference(t, n_cells)
