"""Total, dynamical and geometric phases; winding of the geometric phase (DTOP)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .criticality import critical_points, critical_times
from .errors import ConfigurationError, DegenerateBandError, DomainError, UndefinedPhaseError
from .floquet_core import PauliOperator, _band_sign, band_arrays, eigenstates_from_n
from .observables import amplitude_grid, k_grid
from .protocols import PERIOD, SIGMA_X, SIGMA_Y, QuenchProtocol, split_time

PHASE_ZERO_TOL = 1e-12
DTOP_K_COUNT = 1200
MAX_REFINEMENTS = 4
REFINE_STEP = np.pi / 2
PLATEAU_TOL = 1e-2
ANOMALY_DISTANCE = 0.1
ANOMALY_MIN_LENGTH = 0.05
QUADRATURE_STEPS = 10_000


def wrap_phase(x):
    """Principal value in (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = np.pi - np.mod(np.pi - x, 2 * np.pi)
    return float(out) if out.ndim == 0 else out


def _phase_grids(protocol: QuenchProtocol, k, t, v: int):
    """Total phase (unreduced argument) and dynamical phase on a (k, t) product."""
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    ell, s = split_time(t)
    ell = np.atleast_1d(ell).astype(float)
    s = np.atleast_1d(s)
    hx, hy = protocol.fields(k)
    E, n, _ = band_arrays(hx, hy)
    G = amplitude_grid(hx, hy, s, v)
    hn = (hx * n[0] + hy * n[1])[:, None]
    hyny = (hy * n[1])[:, None]
    hxnx = (hx * n[0])[:, None]
    sr = s[None, :]
    branch = np.where(sr < 1.0, -v * sr * hxnx, -v * (hn - (PERIOD - sr) * hyny))
    dyn = ell[None, :] * (-v * hn) + branch
    total = np.angle(G) - ell[None, :] * v * E[:, None]
    return total, dyn, np.abs(G)


def _scalar_phases(protocol, k, v, t):
    v = _band_sign(v)
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    total, dyn, mag = _phase_grids(protocol, np.array([float(k)]), np.array([float(t)]), v)
    if not np.isfinite(mag[0, 0]):
        raise DegenerateBandError(k)
    return float(total[0, 0]), float(dyn[0, 0]), float(mag[0, 0])


def total_phase(protocol: QuenchProtocol, k: float, v, t: float) -> float:
    """Argument of the return amplitude, principal value in (-pi, pi]."""
    total, _, mag = _scalar_phases(protocol, k, v, t)
    if mag < PHASE_ZERO_TOL:
        raise UndefinedPhaseError(f"return amplitude vanishes at k={k}, t={t}")
    return wrap_phase(total)


def dynamical_phase(protocol: QuenchProtocol, k: float, v, t: float) -> float:
    """Closed-form dynamical phase; continuous and piecewise linear in t."""
    _, dyn, mag = _scalar_phases(protocol, k, v, t)
    if mag < PHASE_ZERO_TOL:
        raise UndefinedPhaseError(f"return amplitude vanishes at k={k}, t={t}")
    return dyn


def geometric_phase(protocol: QuenchProtocol, k: float, v, t: float) -> float:
    """Noncyclic geometric phase, principal value in (-pi, pi]."""
    total, dyn, mag = _scalar_phases(protocol, k, v, t)
    if mag < PHASE_ZERO_TOL:
        raise UndefinedPhaseError(f"return amplitude vanishes at k={k}, t={t}")
    return wrap_phase(total - dyn)


def _evolved_states(protocol, k, v, times):
    """Evolved Floquet eigenstate at many times, shape (len(times), 2)."""
    hx, hy = protocol.fields(np.array([float(k)]))
    E, n, _ = band_arrays(hx, hy)
    psi = eigenstates_from_n(n[:, 0], v)
    ell, s = split_time(np.asarray(times, dtype=float))
    first = s < 1.0
    op_x = PauliOperator.exp_axis(s * hx[0], "x")
    op_y = PauliOperator.exp_axis(-(PERIOD - s) * hy[0], "y")
    states_x = op_x.apply(np.broadcast_to(psi, (s.size, 2)))
    states_y = op_y.apply(np.broadcast_to(psi, (s.size, 2)))
    Ev = v * E[0]
    phase = np.exp(-1j * np.where(first, ell, ell + 1) * Ev)
    return phase[:, None] * np.where(first[:, None], states_x, states_y), hx[0], hy[0]


def dynamical_phase_quadrature(protocol: QuenchProtocol, k: float, v, t: float,
                               steps_per_period: int = QUADRATURE_STEPS) -> float:
    """Dynamical phase by direct time quadrature of the energy expectation.

    Composite midpoint rule; the interval is split at every half-period
    switch so each panel sees a single Hamiltonian.  Intended as an
    independent check of :func:`dynamical_phase`.
    """
    v = _band_sign(v)
    t = float(t)
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    edges = np.arange(0.0, t, 1.0)
    edges = np.append(edges, t)
    mids, widths, on_x = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        cells = max(1, int(math.ceil((b - a) * steps_per_period / PERIOD)))
        h = (b - a) / cells
        mids.append(a + (np.arange(cells) + 0.5) * h)
        widths.append(np.full(cells, h))
        on_x.append(np.full(cells, (math.floor(a) % 2) == 0))
    if not mids:
        return 0.0
    mids = np.concatenate(mids)
    widths = np.concatenate(widths)
    on_x = np.concatenate(on_x)
    states, hx, hy = _evolved_states(protocol, k, v, mids)
    if not np.all(np.isfinite(states)):
        raise DegenerateBandError(k)
    Hx = hx * SIGMA_X
    Hy = hy * SIGMA_Y
    ex = np.einsum("ti,ij,tj->t", states.conj(), Hx, states).real
    ey = np.einsum("ti,ij,tj->t", states.conj(), Hy, states).real
    energy = np.where(on_x, ex, ey)
    return float(-np.sum(energy * widths))


@dataclass
class PhaseTrace:
    k_grid: np.ndarray
    s_grid: np.ndarray
    total: np.ndarray
    dynamical: np.ndarray
    geometric: np.ndarray
    v: int


def _unwrap_k(phi):
    """Fold successive differences along axis 0 into (-pi, pi] and accumulate."""
    d = np.diff(phi, axis=0)
    d = wrap_phase(d)
    return np.concatenate([phi[:1], phi[:1] + np.cumsum(d, axis=0)], axis=0)


def phase_trace(protocol: QuenchProtocol, v, s, k_count: int = 300) -> PhaseTrace:
    """Phases on the offset k-grid; the geometric phase is unwrapped along k."""
    v = _band_sign(v)
    ks = k_grid(k_count)
    s = np.asarray(s, dtype=float)
    total, dyn, _ = _phase_grids(protocol, ks, s, v)
    geo = _unwrap_k(wrap_phase(total - dyn))
    return PhaseTrace(k_grid=ks, s_grid=s, total=wrap_phase(total), dynamical=dyn,
                      geometric=geo, v=v)


@dataclass
class DtopTrace:
    s_grid: np.ndarray
    w: np.ndarray
    k_range: str
    k_count: int
    v: int
    predicted: list = field(default_factory=list)
    jumps: list = field(default_factory=list)
    plateaus: list = field(default_factory=list)
    anomalous: list = field(default_factory=list)
    refinements: np.ndarray | None = None
    critical_convention: str = "right-limit"

    def jump_at(self, t_c: float) -> int:
        """``round(w(t_c+)) - round(w(t_c-))`` using neighbouring samples."""
        s = self.s_grid
        left = np.where(s < t_c - 1e-12)[0]
        right = np.where(s >= t_c - 1e-12)[0]
        if left.size == 0 or right.size == 0:
            raise DomainError(f"t_c={t_c} is not bracketed by the time grid")
        return int(round(self.w[right[0]]) - round(self.w[left[-1]]))

    @property
    def non_quantized(self) -> bool:
        return any(b - a >= ANOMALY_MIN_LENGTH for a, b in self.anomalous)

    def to_dict(self) -> dict:
        return {
            "k_range": self.k_range,
            "k_count": self.k_count,
            "v": self.v,
            "predicted": list(self.predicted),
            "jumps": [{"t": t, "dw": dw} for t, dw in self.jumps],
            "plateaus": [{"start": a, "end": b, "value": val} for a, b, val in self.plateaus],
            "anomalous_windows": [{"start": a, "end": b} for a, b in self.anomalous],
            "non_quantized": self.non_quantized,
            "critical_convention": self.critical_convention,
        }


def _dtop_k(range_mode: str, count: int):
    if range_mode == "reduced":
        return (np.arange(count) + 0.5) * (np.pi / 2 / count)
    return -np.pi + (np.arange(count) + 0.5) * (2 * np.pi / count)


def _winding(protocol, ks, t, v):
    total, dyn, _ = _phase_grids(protocol, ks, t, v)
    phi = wrap_phase(total - dyn)
    d = wrap_phase(np.diff(phi, axis=0))
    # NaN rows (exactly gapless k) are bridged by skipping them
    finite = np.isfinite(phi)
    if not finite.all():
        out = np.empty(phi.shape[1])
        step = np.empty(phi.shape[1])
        for j in range(phi.shape[1]):
            col = phi[finite[:, j], j]
            dj = wrap_phase(np.diff(col))
            out[j] = dj.sum() / (2 * np.pi)
            step[j] = np.abs(dj).max() if dj.size else 0.0
        return out, step
    return d.sum(axis=0) / (2 * np.pi), np.abs(d).max(axis=0)


def dtop(protocol: QuenchProtocol, v, s, k_count: int = DTOP_K_COUNT, k_range: str = "reduced",
         predicted: Sequence | None = None) -> DtopTrace:
    """Winding of the geometric phase across the k-range at each time.

    ``k_range='reduced'`` integrates over [0, pi/2] with ``k_count`` points and
    requires both protocol symmetries.  ``k_range='full'`` integrates over
    [-pi, pi) with ``4*k_count`` points, keeping the same resolution.  Columns
    whose largest folded step exceeds pi/2 are recomputed on doubled grids up
    to four times.  Times that coincide with a predicted critical time are
    evaluated just to the right of it.
    """
    v = _band_sign(v)
    if k_range not in ("reduced", "full"):
        raise ConfigurationError(f"k_range must be 'reduced' or 'full', got {k_range!r}")
    if k_range == "reduced" and not protocol.symmetric:
        raise ConfigurationError("reduced-range winding requires translation_by_pi and reflection symmetry")
    if k_count < 2:
        raise ConfigurationError(f"k_count must be at least 2, got {k_count}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("times must be non-negative")
    if predicted is None:
        predicted = critical_points(protocol)
    t_c = critical_times(predicted)

    diffs = np.diff(s)
    nudge = 0.25 * float(diffs[diffs > 0].min()) if np.any(diffs > 0) else 1e-4
    t_eval = s.copy()
    _, s_red = split_time(s)
    s_red = np.atleast_1d(s_red)
    for tc in t_c:
        t_eval = np.where(np.abs(s_red - tc) < 1e-12, t_eval + nudge, t_eval)

    base = k_count if k_range == "reduced" else 4 * k_count
    w, step = _winding(protocol, _dtop_k(k_range, base), t_eval, v)
    refinements = np.zeros(s.size, dtype=int)
    todo = np.where(step > REFINE_STEP)[0]
    count = base
    for level in range(1, MAX_REFINEMENTS + 1):
        if todo.size == 0:
            break
        count *= 2
        w_new, step_new = _winding(protocol, _dtop_k(k_range, count), t_eval[todo], v)
        w[todo] = w_new
        refinements[todo] = level
        todo = todo[step_new > REFINE_STEP]

    trace = DtopTrace(s_grid=s, w=w, k_range=k_range, k_count=k_count, v=v, predicted=list(t_c),
                      refinements=refinements)
    _annotate(trace, t_c)
    return trace


def _runs(mask):
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def near_critical(s, t_c, width):
    """Mask of samples within ``width`` of any critical time (periodically)."""
    _, s_red = split_time(np.asarray(s, dtype=float))
    s_red = np.atleast_1d(s_red)
    mask = np.zeros(s_red.size, dtype=bool)
    for tc in t_c:
        dist = np.abs(s_red - tc)
        dist = np.minimum(dist, PERIOD - dist)
        mask |= dist <= width
    return mask


def _annotate(trace: DtopTrace, t_c):
    s, w = trace.s_grid, trace.w
    r = np.round(w)
    trace.jumps = [(float(s[i + 1]), int(r[i + 1] - r[i])) for i in range(s.size - 1) if r[i + 1] != r[i]]
    dist = np.abs(w - r)
    flat = dist < PLATEAU_TOL
    plateaus = []
    for a, b in _runs(flat):
        # split runs where the rounded value changes
        start = a
        for i in range(a + 1, b + 1):
            if r[i] != r[i - 1]:
                plateaus.append((float(s[start]), float(s[i - 1]), int(r[start])))
                start = i
        plateaus.append((float(s[start]), float(s[b]), int(r[start])))
    trace.plateaus = plateaus
    ds = float(np.min(np.diff(s))) if s.size > 1 else 0.0
    excluded = near_critical(s, t_c, ds * (1 + 1e-9))
    anomalous = (dist > ANOMALY_DISTANCE) & ~excluded
    trace.anomalous = [(float(s[a]), float(s[b])) for a, b in _runs(anomalous)]
