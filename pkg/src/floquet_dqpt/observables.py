"""Return amplitudes, return probabilities, rate function and cusp detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, root

from .errors import DegenerateBandError, DomainError
from .floquet_core import _band_sign, band_arrays
from .protocols import PERIOD, QuenchProtocol, split_time

G_MIN = 1e-300
DEFAULT_K_COUNT = 300
DEFAULT_S_COUNT = 2000
CUSP_THRESHOLD = 20.0
# continuity step used to define g at exactly gapless momenta
CONTINUITY_DK = 1e-7


def k_grid(n: int) -> np.ndarray:
    """Uniform grid of ``n`` midpoints on [-pi, pi)."""
    if n < 2:
        raise DomainError(f"k grid needs at least 2 points, got {n}")
    return -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)


def s_grid(m: int) -> np.ndarray:
    """Uniform grid of ``m`` micromotion times on [0, 2) starting at 0."""
    if m < 2:
        raise DomainError(f"s grid needs at least 2 points, got {m}")
    return np.arange(m) * (PERIOD / m)


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s >= PERIOD) or not np.all(np.isfinite(s)):
        raise DomainError("micromotion times must lie in [0, 2)")
    return s


def amplitude_grid(hx, hy, s, v: int):
    """Closed-form return amplitude on an outer (k, s) product.

    ``hx``, ``hy`` are length-N field arrays and ``s`` a length-M array of
    micromotion times.  Rows at gapless momenta are NaN.
    """
    E, n, _ = band_arrays(hx, hy)
    hx = np.asarray(hx, dtype=float)[:, None]
    hy = np.asarray(hy, dtype=float)[:, None]
    E = E[:, None]
    nx, ny = n[0][:, None], n[1][:, None]
    s = np.asarray(s, dtype=float)[None, :]
    first = s < 1.0
    sp = PERIOD - s
    G1 = np.cos(s * hx) - 1j * np.sin(s * hx) * v * nx
    G2 = np.exp(-1j * v * E) * (np.cos(sp * hy) + 1j * np.sin(sp * hy) * v * ny)
    return np.where(first, G1, G2)


def probability_grid(hx, hy, s):
    """Closed-form return probability on a (k, s) product; v-independent."""
    E, n, _ = band_arrays(hx, hy)
    hx = np.asarray(hx, dtype=float)[:, None]
    hy = np.asarray(hy, dtype=float)[:, None]
    nx, ny = n[0][:, None], n[1][:, None]
    s = np.asarray(s, dtype=float)[None, :]
    sp = PERIOD - s
    g1 = np.cos(s * hx) ** 2 + np.sin(s * hx) ** 2 * nx ** 2
    g2 = np.cos(sp * hy) ** 2 + np.sin(sp * hy) ** 2 * ny ** 2
    return np.where(s < 1.0, g1, g2)


def _probability_on_k(protocol: QuenchProtocol, k, s):
    k = np.asarray(k, dtype=float)
    hx, hy = protocol.fields(k)
    g = probability_grid(hx, hy, s)
    bad = np.isnan(g).any(axis=1)
    if np.any(bad):
        kb = k[bad]
        lo = probability_grid(*protocol.fields(kb - CONTINUITY_DK), s)
        hi = probability_grid(*protocol.fields(kb + CONTINUITY_DK), s)
        g[bad] = 0.5 * (lo + hi)
    return g


def return_amplitude(protocol: QuenchProtocol, k: float, v, s: float) -> complex:
    """Return amplitude of a Floquet eigenstate at micromotion time ``s``."""
    v = _band_sign(v)
    s = float(_check_s(s))
    hx, hy = protocol.fields(np.array([float(k)]))
    G = amplitude_grid(hx, hy, np.array([s]), v)[0, 0]
    if not np.isfinite(G):
        raise DegenerateBandError(k)
    return complex(G)


def full_return_amplitude(protocol: QuenchProtocol, k: float, v, t: float) -> complex:
    """``exp(-i ell E_v) G_v(k, s)`` for ``t = s + 2 ell``."""
    v = _band_sign(v)
    ell, s = split_time(t)
    hx, hy = protocol.fields(np.array([float(k)]))
    E, _, _ = band_arrays(hx, hy)
    return complex(np.exp(-1j * ell * v * E[0]) * return_amplitude(protocol, k, v, s))


def return_probability(protocol: QuenchProtocol, k, s):
    """Return probability ``g(k, s)``.

    Scalar inputs give a float.  Array ``k`` and ``s`` give an array of shape
    ``(len(k), len(s))``.  At exactly gapless momenta ``g`` is the continuous
    limit from neighbouring k.
    """
    s_arr = _check_s(s)
    k_arr = np.asarray(k, dtype=float)
    g = _probability_on_k(protocol, np.atleast_1d(k_arr), np.atleast_1d(s_arr))
    if k_arr.ndim == 0 and s_arr.ndim == 0:
        return float(g[0, 0])
    if k_arr.ndim == 0:
        return g[0]
    if s_arr.ndim == 0:
        return g[:, 0]
    return g


@dataclass
class ReturnTrace:
    protocol: QuenchProtocol
    k_grid: np.ndarray
    s_grid: np.ndarray
    g: np.ndarray
    f: np.ndarray
    g_min: float = G_MIN

    @property
    def protocol_id(self) -> dict:
        return self.protocol.describe()

    def periodic(self, periods: int):
        """Times and rate values tiled over ``periods`` driving periods."""
        t = np.concatenate([self.s_grid + PERIOD * ell for ell in range(periods)])
        return t, np.tile(self.f, periods)


def rate_function(protocol: QuenchProtocol, s=None, k_count: int = DEFAULT_K_COUNT,
                  g_min: float = G_MIN) -> ReturnTrace:
    """Rate function of the return probability by midpoint quadrature over k."""
    if k_count < 2:
        raise DomainError(f"k_count must be at least 2, got {k_count}")
    s = s_grid(DEFAULT_S_COUNT) if s is None else _check_s(s)
    ks = k_grid(k_count)
    g = _probability_on_k(protocol, ks, s)
    f = -np.mean(np.log(np.maximum(g, g_min)), axis=0)
    return ReturnTrace(protocol=protocol, k_grid=ks, s_grid=np.asarray(s, dtype=float), g=g, f=f,
                       g_min=g_min)


@dataclass
class CuspReport:
    """Outcome of cusp detection on a rate-function trace.

    ``detected`` holds ``(t, sharpness)`` pairs, one per distinct time at
    which the return amplitude vanishes inside a flagged window.  Flagged
    windows without any amplitude zero are quadrature artifacts of the
    finite k-grid and are listed in ``rejected`` instead.
    """

    detected: list
    predicted: list
    matched: list
    unmatched_predicted: list
    unmatched_detected: list
    rejected: list = field(default_factory=list)
    raw: list = field(default_factory=list)
    ds: float = float("nan")
    threshold: float = CUSP_THRESHOLD

    @property
    def times(self) -> list:
        return [t for t, _ in self.detected]

    def to_dict(self) -> dict:
        return {
            "detected": [{"t": t, "sharpness": sh} for t, sh in self.detected],
            "predicted": list(self.predicted),
            "matched": [{"predicted": p, "detected": d, "dt": dt} for p, d, dt in self.matched],
            "unmatched_predicted": list(self.unmatched_predicted),
            "unmatched_detected": list(self.unmatched_detected),
            "rejected_windows": [list(w) for w in self.rejected],
            "raw_flag_times": list(self.raw),
            "ds": self.ds,
            "threshold": self.threshold,
        }


def _find_zero(protocol: QuenchProtocol, k0: float, s0: float):
    """Solve ``G(k, s) = 0`` near ``(k0, s0)``; returns ``(k, s)`` or None."""

    def amp(x):
        hx, hy = protocol.fields(np.array([x[0]]))
        s = x[1]
        if not 0.0 <= s < PERIOD:
            return complex(np.nan)
        return amplitude_grid(hx, hy, np.array([s]), -1)[0, 0]

    def residual(x):
        z = amp(x)
        return [z.real, z.imag]

    sol = root(residual, [k0, s0])
    if sol.success:
        z = amp(sol.x)
        if np.isfinite(z) and abs(z) < 1e-10:
            return sol.x
    # cone-shaped zeros at gapless momenta defeat Newton; fall back to a simplex search

    def sq(x):
        z = amp(x)
        return abs(z) ** 2 if np.isfinite(z) else 1.0

    res = minimize(sq, [k0, s0], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-30, "maxiter": 4000})
    if res.fun < 1e-14:
        return res.x
    return None


def _cluster(indices, gap):
    clusters = []
    for i in indices:
        if clusters and i - clusters[-1][-1] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def detect_cusps(trace: ReturnTrace, predicted: Sequence = (), threshold: float = CUSP_THRESHOLD,
                 merge_gap: int = 30, pad: int = 20) -> CuspReport:
    """Locate nonanalytic cusps of the rate function.

    Samples whose negative second difference exceeds ``threshold`` times the
    median absolute second difference are flagged; differences never straddle
    the protocol switch at ``s = 1``.  Flags are grouped into windows and each
    window is certified by solving for zeros of the return amplitude inside
    it, which also gives the cusp time to root-finding accuracy.
    """
    s = np.asarray(trace.s_grid, dtype=float)
    if s.size < 3:
        raise DomainError("s grid too short for cusp detection")
    steps = np.diff(s)
    ds = float(steps.mean())
    if not np.allclose(steps, ds, rtol=1e-6, atol=1e-12):
        raise DomainError("cusp detection requires a uniform s grid")
    if PERIOD / ds < 500 - 1e-9:
        raise DomainError(f"cusp detection needs at least 500 points per period, got {PERIOD / ds:.0f}")

    f = trace.f
    segments = [np.where(s < 1.0)[0], np.where(s >= 1.0)[0]]
    d2_parts = []
    for seg in segments:
        if seg.size >= 3:
            fs = f[seg]
            d2_parts.append((seg[1:-1], -(fs[2:] - 2 * fs[1:-1] + fs[:-2])))
    all_d2 = np.concatenate([d for _, d in d2_parts]) if d2_parts else np.zeros(0)
    scale = float(np.median(np.abs(all_d2))) if all_d2.size else 0.0
    scale = max(scale, np.finfo(float).tiny)

    g = np.maximum(trace.g, trace.g_min)
    kg = trace.k_grid
    n_k = kg.size
    found = []
    rejected = []
    raw = []
    for (idx, d2), seg, half in zip(d2_parts, segments, [(0.0, 1.0), (1.0, PERIOD)]):
        flags = idx[d2 > threshold * scale]
        norm = dict(zip(idx.tolist(), (d2 / scale).tolist()))
        for cl in _cluster(flags.tolist(), merge_gap):
            sharp = max(norm[i] for i in cl)
            raw.append(float(s[max(cl, key=lambda i: norm[i])]))
            i0 = max(seg[0], cl[0] - pad)
            i1 = min(seg[-1] + 1, cl[-1] + pad + 1)
            sub = g[:, i0:i1]
            jmin = np.argmin(sub, axis=1)
            rowmin = sub[np.arange(n_k), jmin]
            seeds = [r for r in range(n_k)
                     if rowmin[r] <= rowmin[(r - 1) % n_k] and rowmin[r] <= rowmin[(r + 1) % n_k]]
            zeros = []
            lo_t = s[i0] - 5 * ds
            hi_t = s[i1 - 1] + 5 * ds
            for r in seeds:
                x = _find_zero(trace.protocol, kg[r], s[i0 + jmin[r]])
                if x is None:
                    continue
                t = float(x[1])
                if half[0] < t < half[1] and lo_t <= t <= hi_t:
                    zeros.append(t)
            if zeros:
                found.extend((t, sharp) for t in zeros)
            else:
                rejected.append((float(s[cl[0]]), float(s[cl[-1]])))

    found.sort()
    detected = []
    for t, sh in found:
        if detected and t - detected[-1][0][-1] < 1e-6:
            detected[-1][0].append(t)
            detected[-1][1] = max(detected[-1][1], sh)
        else:
            detected.append([[t], sh])
    detected = [(float(np.mean(ts)), float(sh)) for ts, sh in detected]

    pred_times = _predicted_times(predicted)
    matched, un_p, un_d = _greedy_match(pred_times, [t for t, _ in detected], 2 * ds)
    return CuspReport(detected=detected, predicted=pred_times, matched=matched,
                      unmatched_predicted=un_p, unmatched_detected=un_d,
                      rejected=rejected, raw=raw, ds=ds, threshold=threshold)


def _predicted_times(predicted) -> list:
    times = sorted(float(getattr(p, "s_c", p)) for p in predicted)
    out = []
    for t in times:
        if not out or t - out[-1] > 1e-9:
            out.append(t)
    return out


def _greedy_match(pred, det, tol):
    pairs = sorted((abs(p - d), i, j) for i, p in enumerate(pred) for j, d in enumerate(det)
                   if abs(p - d) <= tol)
    used_p, used_d, matched = set(), set(), []
    for dist, i, j in pairs:
        if i in used_p or j in used_d:
            continue
        used_p.add(i)
        used_d.add(j)
        matched.append((pred[i], det[j], det[j] - pred[i]))
    matched.sort()
    un_p = [p for i, p in enumerate(pred) if i not in used_p]
    un_d = [d for j, d in enumerate(det) if j not in used_d]
    return matched, un_p, un_d
