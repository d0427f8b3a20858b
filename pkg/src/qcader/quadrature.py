"""Quadrature rules on the unit right triangle, on segments and on time slabs."""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class QuadRule:
    """Points and positive weights with a guaranteed exactness degree.

    Triangle rules live on the reference triangle (0,0),(1,0),(0,1) (weights sum
    to 1/2); edge rules live on [0, 1] (weights sum to 1).
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


# symmetric orbits: ("c", w) centroid, ("s21", a, w) three points (a, a, 1-2a),
# ("s111", a, b, w) six permutations of (a, b, 1-a-b); w are fractions of the area
_R15 = sqrt(15.0)
_ORBITS = {
    1: [("c", 1.0)],
    2: [("s21", 1.0 / 6.0, 1.0 / 3.0)],
    4: [("s21", 0.445948490915965, 0.223381589678011),
        ("s21", 0.091576213509771, 0.109951743655322)],
    5: [("c", 0.225),
        ("s21", (6.0 + _R15) / 21.0, (155.0 + _R15) / 1200.0),
        ("s21", (6.0 - _R15) / 21.0, (155.0 - _R15) / 1200.0)],
    6: [("s21", 0.24928674517091226, 0.11678627572637744),
        ("s21", 0.06308901449150205, 0.05084490637020631),
        ("s111", 0.05314504984481764, 0.3103524510337826, 0.08285107561837479)],
    8: [("c", 0.144315607677787),
        ("s21", 0.459292588292723, 0.095091634267285),
        ("s21", 0.170569307751760, 0.103217370534718),
        ("s21", 0.050547228317031, 0.032458497623198),
        ("s111", 0.008394777409958, 0.263112829634638, 0.027230314174435)],
    9: [("c", 0.09713579628245568),
        ("s21", 0.4896825191986234, 0.03133470022736151),
        ("s21", 0.43708959149272, 0.0778275410047189),
        ("s21", 0.18820353561896147, 0.0796477389271966),
        ("s21", 0.044729513394457965, 0.02557767565870449),
        ("s111", 0.03683841205471147, 0.22196298916080087, 0.04328353937726663)],
}
# requested degree -> shipped rule (all rules have positive weights)
_TRI_PICK = {0: 1, 1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8, 8: 8, 9: 9}
MAX_DEGREE = 9


def _expand(orbits):
    bary, w = [], []
    for o in orbits:
        if o[0] == "c":
            bary.append((1 / 3, 1 / 3, 1 / 3))
            w.append(o[1])
        elif o[0] == "s21":
            a, ww = o[1], o[2]
            b = 1.0 - 2.0 * a
            bary += [(a, a, b), (a, b, a), (b, a, a)]
            w += [ww] * 3
        else:
            a, b, ww = o[1], o[2], o[3]
            c = 1.0 - a - b
            bary += [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
            w += [ww] * 6
    bary = np.array(bary)
    return bary[:, 1:].copy(), 0.5 * np.array(w)


def triangle_rule(degree: int) -> QuadRule:
    """Symmetric positive rule on the unit right triangle exact to ``degree``."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported triangle rule degree {degree} (max {MAX_DEGREE})")
    d = _TRI_PICK[degree]
    pts, w = _expand(_ORBITS[d])
    return QuadRule(pts, w, d)


def edge_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] exact to ``degree``."""
    if degree < 0 or degree > 2 * MAX_DEGREE + 1:
        raise ValueError(f"unsupported edge rule degree {degree}")
    n = degree // 2 + 1
    x, w = leggauss(n)
    return QuadRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 1)


def time_rule(n_nodes: int) -> QuadRule:
    """Gauss-Legendre with ``n_nodes`` nodes on the unit time slab [0, 1]."""
    x, w = leggauss(n_nodes)
    return QuadRule(0.5 * (x + 1.0), 0.5 * w, 2 * n_nodes - 1)


def map_triangle(rule: QuadRule, a, b, c):
    """Map a reference rule to physical triangles.

    a, b, c are (..., 2) vertex arrays; returns points (..., nq, 2) and weights
    (..., nq) that already include the triangle area.
    """
    a, b, c = (np.asarray(z, dtype=float) for z in (a, b, c))
    e1 = b - a
    e2 = c - a
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    xi = rule.points[:, 0]
    eta = rule.points[:, 1]
    pts = (a[..., None, :] + xi[:, None] * e1[..., None, :] + eta[:, None] * e2[..., None, :])
    w = np.abs(det)[..., None] * rule.weights
    return pts, w
