"""Critical momenta and times, gapless momenta and PQL phase boundaries.

Zeros of the return amplitude occur on four families:

* ``FIRST_HX_INTEGER``:      h_x(k) = m*pi (m != 0),       s_c = (2p-1)/(2m)
* ``FIRST_HY_HALFINTEGER``:  h_y(k) = (2m-1)*pi/2,         s_c = (2p-1)*pi/(2 h_x(k))
* ``SECOND_HY_INTEGER``:     h_y(k) = n*pi (n != 0),       s' = (2q-1)/(2n)
* ``SECOND_HX_HALFINTEGER``: h_x(k) = (2n-1)*pi/2,         s' = (2q-1)*pi/(2 h_y(k))

with ``s_c = 2 - s'`` on the second-half families and all times strictly
inside their half period.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError
from .protocols import PERIOD, ProtocolKind, QuenchProtocol

MERGE_TOL = 1e-9
DENOM_TOL = 1e-12
LEVEL_TOL = 1e-9


class Branch(str, enum.Enum):
    FIRST_HX_INTEGER = "FirstHalf_hx_integer"
    FIRST_HY_HALFINTEGER = "FirstHalf_hy_halfinteger"
    SECOND_HY_INTEGER = "SecondHalf_hy_integer"
    SECOND_HX_HALFINTEGER = "SecondHalf_hx_halfinteger"

    @property
    def first_half(self) -> bool:
        return self in (Branch.FIRST_HX_INTEGER, Branch.FIRST_HY_HALFINTEGER)


@dataclass
class CriticalPoint:
    k_c: float
    s_c: float
    branch: Branch
    indices: tuple
    labels: list = field(default_factory=list)
    principal_k: float | None = None
    gapless: bool = False

    def to_dict(self) -> dict:
        return {
            "k_c": self.k_c,
            "s_c": self.s_c,
            "branch": self.branch.value,
            "indices": list(self.indices),
            "labels": [[b.value, list(ix)] for b, ix in self.labels],
            "principal_k": self.principal_k,
        }


@dataclass(frozen=True)
class GaplessMomentum:
    k_0: float
    m: int
    n: int


def wrap_k(k):
    """Map quasimomenta into [-pi, pi); pi itself maps to -pi."""
    k = np.asarray(k, dtype=float)
    out = np.mod(k + np.pi, 2 * np.pi) - np.pi
    out = np.where(np.abs(out - np.pi) < 1e-15, -np.pi, out)
    return float(out) if out.ndim == 0 else out


def _cos_images(c: float) -> tuple[float, list]:
    c = min(1.0, max(-1.0, c))
    k = math.acos(c)
    return k, [wrap_k(k), wrap_k(-k)]


def _sin_images(c: float) -> tuple[float, list]:
    c = min(1.0, max(-1.0, c))
    k = math.asin(c)
    return k, [wrap_k(k), wrap_k(math.pi - k)]


def _dedupe_k(ks):
    out = []
    for k in sorted(ks):
        if not any(_kdist(k, o) < MERGE_TOL for o in out):
            out.append(k)
    return out


def _kdist(a, b):
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _half_odd_times(lo_factor: float):
    """All (p, (2p-1)*lo_factor) with value in (0, 1); lo_factor may be negative."""
    if lo_factor == 0 or not math.isfinite(lo_factor):
        return []
    out = []
    p_max = int(math.floor(1.0 / (2 * abs(lo_factor)) + 0.5)) + 1
    for p in range(-p_max - 1, p_max + 2):
        val = (2 * p - 1) * lo_factor
        if 0.0 < val < 1.0 and not math.isclose(val, 1.0, rel_tol=0, abs_tol=1e-15):
            out.append((p, val))
    return out


def _emit(points, k, s, branch, indices, principal):
    points.append(CriticalPoint(k_c=float(k), s_c=float(s), branch=branch, indices=tuple(indices),
                                labels=[(branch, tuple(indices))], principal_k=float(principal)))


def critical_points_pql(J_x: float, J_y: float) -> list:
    """Closed-form critical points of the PQL model."""
    J_x, J_y = float(J_x), float(J_y)
    if J_x <= 0 or J_y <= 0:
        raise ParameterError("PQL amplitudes must be positive")
    pts: list = []
    pi = math.pi

    m_max = int(math.floor(J_x / pi + 1e-12))
    for m in range(-m_max, m_max + 1):
        if m == 0 or abs(m * pi / J_x) > 1:
            continue
        k0, images = _cos_images(m * pi / J_x)
        for p, sc in _half_odd_times(1.0 / (2 * m)):
            for k in images:
                _emit(pts, k, sc, Branch.FIRST_HX_INTEGER, (m, p), k0)

    for m in range(-int(J_y / pi) - 2, int(J_y / pi) + 3):
        level = (2 * m - 1) * pi / 2
        if abs(level) > J_y:
            continue
        k0, images = _sin_images(level / J_y)
        for k in _dedupe_k(images):
            hx = J_x * math.cos(k)
            if abs(math.cos(k)) < DENOM_TOL:
                continue
            for p, sc in _half_odd_times(pi / (2 * hx)):
                _emit(pts, k, sc, Branch.FIRST_HY_HALFINTEGER, (m, p), k0)

    n_max = int(math.floor(J_y / pi + 1e-12))
    for n in range(-n_max, n_max + 1):
        if n == 0 or abs(n * pi / J_y) > 1:
            continue
        k0, images = _sin_images(n * pi / J_y)
        for q, sp in _half_odd_times(1.0 / (2 * n)):
            for k in _dedupe_k(images):
                _emit(pts, k, PERIOD - sp, Branch.SECOND_HY_INTEGER, (n, q), k0)

    for n in range(-int(J_x / pi) - 2, int(J_x / pi) + 3):
        level = (2 * n - 1) * pi / 2
        if abs(level) > J_x:
            continue
        k0, images = _cos_images(level / J_x)
        for k in _dedupe_k(images):
            if abs(math.sin(k)) < DENOM_TOL:
                continue
            hy = J_y * math.sin(k)
            for q, sp in _half_odd_times(pi / (2 * hy)):
                _emit(pts, k, PERIOD - sp, Branch.SECOND_HX_HALFINTEGER, (n, q), k0)

    return _finalize(pts, _pql_gapless(J_x, J_y))


def _level_roots(func, level: float, grid: np.ndarray) -> list:
    """All k in [-pi, pi) with ``func(k) == level`` on a periodic function."""
    vals = func(grid) - level
    roots = []
    n = grid.size
    closed = np.append(grid, grid[0] + 2 * np.pi)
    cvals = np.append(vals, vals[0])
    for i in range(n):
        a, b = cvals[i], cvals[i + 1]
        if a == 0.0:
            roots.append(closed[i])
        elif a * b < 0:
            roots.append(brentq(lambda x: func(np.array([x]))[0] - level, closed[i], closed[i + 1],
                                xtol=1e-14, rtol=4 * np.finfo(float).eps))
    # tangential touches: extrema of func that graze the level
    eps = 1e-6

    def deriv(x):
        return (func(np.array([x + eps]))[0] - func(np.array([x - eps]))[0]) / (2 * eps)

    dv = np.array([deriv(x) for x in closed])
    for i in range(n):
        if dv[i] * dv[i + 1] < 0:
            x = brentq(deriv, closed[i], closed[i + 1], xtol=1e-14)
            if abs(func(np.array([x]))[0] - level) < LEVEL_TOL:
                roots.append(x)
    return _dedupe_k([wrap_k(r) for r in roots])


def critical_points_general(protocol: QuenchProtocol, grid_points: int = 4096) -> list:
    """Critical points of an arbitrary protocol via numerical level sets."""
    grid = -np.pi + np.arange(grid_points) * (2 * np.pi / grid_points)
    hx_f = lambda k: protocol.fields(k)[0]  # noqa: E731
    hy_f = lambda k: protocol.fields(k)[1]  # noqa: E731
    hx_all, hy_all = protocol.fields(grid)
    hx_bound = float(np.max(np.abs(hx_all))) + 1.0
    hy_bound = float(np.max(np.abs(hy_all))) + 1.0
    pi = math.pi
    pts: list = []

    for m in range(-int(hx_bound / pi) - 1, int(hx_bound / pi) + 2):
        if m == 0:
            continue
        for k in _level_roots(hx_f, m * pi, grid):
            for p, sc in _half_odd_times(1.0 / (2 * m)):
                _emit(pts, k, sc, Branch.FIRST_HX_INTEGER, (m, p), k)

    for m in range(-int(hy_bound / pi) - 2, int(hy_bound / pi) + 3):
        for k in _level_roots(hy_f, (2 * m - 1) * pi / 2, grid):
            hx = float(hx_f(np.array([k]))[0])
            if abs(hx) < DENOM_TOL:
                continue
            for p, sc in _half_odd_times(pi / (2 * hx)):
                _emit(pts, k, sc, Branch.FIRST_HY_HALFINTEGER, (m, p), k)

    for n in range(-int(hy_bound / pi) - 1, int(hy_bound / pi) + 2):
        if n == 0:
            continue
        for k in _level_roots(hy_f, n * pi, grid):
            for q, sp in _half_odd_times(1.0 / (2 * n)):
                _emit(pts, k, PERIOD - sp, Branch.SECOND_HY_INTEGER, (n, q), k)

    for n in range(-int(hx_bound / pi) - 2, int(hx_bound / pi) + 3):
        for k in _level_roots(hx_f, (2 * n - 1) * pi / 2, grid):
            hy = float(hy_f(np.array([k]))[0])
            if abs(hy) < DENOM_TOL:
                continue
            for q, sp in _half_odd_times(pi / (2 * hy)):
                _emit(pts, k, PERIOD - sp, Branch.SECOND_HX_HALFINTEGER, (n, q), k)

    return _finalize(pts, _general_gapless(protocol, grid))


def _finalize(pts, gapless) -> list:
    merged: list = []
    for p in sorted(pts, key=lambda c: (c.s_c, c.k_c)):
        for q in merged:
            if abs(q.s_c - p.s_c) < MERGE_TOL and _kdist(q.k_c, p.k_c) < MERGE_TOL:
                for lab in p.labels:
                    if lab not in q.labels:
                        q.labels.append(lab)
                break
        else:
            merged.append(p)
    # order by time rounded to the merge scale so equal times sort by k
    merged.sort(key=lambda c: (round(c.s_c, 9), c.k_c))
    for p in merged:
        p.gapless = any(_kdist(p.k_c, g.k_0) < 1e-9 for g in gapless)
    return merged


def critical_points(protocol: QuenchProtocol) -> list:
    """Dispatch to the closed form for PQL and to the level-set solver otherwise."""
    if protocol.kind == ProtocolKind.PQL:
        return critical_points_pql(protocol.params["J_x"], protocol.params["J_y"])
    return critical_points_general(protocol)


def critical_times(points) -> list:
    """Distinct critical times in ascending order."""
    out: list = []
    for t in sorted(p.s_c for p in points):
        if not out or t - out[-1] > MERGE_TOL:
            out.append(t)
    return out


def _pql_gapless(J_x: float, J_y: float) -> list:
    pi = math.pi
    out = []
    for m in range(-int(J_x / pi) - 1, int(J_x / pi) + 2):
        if abs(m * pi) > J_x * (1 + 1e-15):
            continue
        _, images = _cos_images(m * pi / J_x)
        for k in _dedupe_k(images):
            hy = J_y * math.sin(k)
            n = round(hy / pi)
            if abs(hy - n * pi) < LEVEL_TOL:
                out.append(GaplessMomentum(k_0=float(k), m=int(m), n=int(n)))
    return sorted(out, key=lambda g: g.k_0)


def _general_gapless(protocol: QuenchProtocol, grid) -> list:
    hx_f = lambda k: protocol.fields(k)[0]  # noqa: E731
    hx_all, _ = protocol.fields(grid)
    bound = float(np.max(np.abs(hx_all))) + 1.0
    out = []
    for m in range(-int(bound / math.pi) - 1, int(bound / math.pi) + 2):
        for k in _level_roots(hx_f, m * math.pi, grid):
            hy = float(protocol.fields(np.array([k]))[1][0])
            n = round(hy / math.pi)
            if abs(hy - n * math.pi) < LEVEL_TOL:
                out.append(GaplessMomentum(k_0=float(k), m=int(m), n=int(n)))
    return sorted(out, key=lambda g: g.k_0)


def gapless_momenta(protocol: QuenchProtocol) -> list:
    """Momenta where ``h_x = m pi`` and ``h_y = n pi`` hold simultaneously."""
    if protocol.kind == ProtocolKind.PQL:
        return _pql_gapless(protocol.params["J_x"], protocol.params["J_y"])
    grid = -np.pi + np.arange(4096) * (2 * np.pi / 4096)
    return _general_gapless(protocol, grid)


def on_phase_boundary(J_x: float, J_y: float, tolerance: float = 1e-9):
    """Whether ``(J_x, J_y)`` sits on a PQL gap-closing curve.

    Returns ``(flag, witnesses)`` where ``witnesses`` lists every ``(m, n)``
    with ``m, n >= 0`` satisfying the boundary relation, ordered by ``(m, n)``.
    """
    J_x, J_y = float(J_x), float(J_y)
    if J_x <= 0 or J_y <= 0:
        raise ParameterError("PQL amplitudes must be positive")
    pi = math.pi
    witnesses = []
    for m in range(0, int(math.floor(J_x / pi + 1e-12)) + 1):
        for n in range(0, int(math.floor(J_y / pi + 1e-12)) + 1):
            val = (m * pi / J_x) ** 2 + (n * pi / J_y) ** 2
            if abs(val - 1.0) < tolerance:
                witnesses.append((m, n))
    return bool(witnesses), witnesses
