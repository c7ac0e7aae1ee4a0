"""Floquet operator, eigenphase band and micromotion evolution.

All 2x2 algebra is carried out on Pauli coefficients ``(c0, cx, cy, cz)`` in
the basis ``{sigma_0, sigma_x, sigma_y, sigma_z}``.  Coefficients may be numpy
arrays, in which case every operation broadcasts elementwise over k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBandError, DomainError
from .protocols import PERIOD, QuenchProtocol, SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z, split_time

GAP_TOL = 1e-9
GAUGE_TOL = 1e-9


@dataclass(frozen=True)
class PauliOperator:
    """Operator ``c0*s0 + cx*sx + cy*sy + cz*sz``."""

    c0: complex
    cx: complex
    cy: complex
    cz: complex

    @classmethod
    def identity(cls):
        return cls(1.0 + 0j, 0j, 0j, 0j)

    @classmethod
    def exp_axis(cls, angle, axis: str):
        """``exp(-i * angle * sigma_axis)`` for axis in ``'x', 'y', 'z'``."""
        angle = np.asarray(angle, dtype=float)
        c = np.cos(angle) + 0j
        m = -1j * np.sin(angle)
        zero = np.zeros_like(c)
        comps = {"x": (m, zero, zero), "y": (zero, m, zero), "z": (zero, zero, m)}
        if axis not in comps:
            raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")
        return cls(c, *comps[axis])

    @classmethod
    def exp_vector(cls, theta, n):
        """``exp(-i * theta * n.sigma)`` for a unit vector ``n``."""
        theta = np.asarray(theta, dtype=float)
        c, sn = np.cos(theta), np.sin(theta)
        return cls(c + 0j, -1j * sn * n[0], -1j * sn * n[1], -1j * sn * n[2])

    def __matmul__(self, other: "PauliOperator") -> "PauliOperator":
        a0, ax, ay, az = self.c0, self.cx, self.cy, self.cz
        b0, bx, by, bz = other.c0, other.cx, other.cy, other.cz
        # (a0 + a.s)(b0 + b.s) = a0 b0 + a.b + (a0 b + b0 a + i a x b).s
        return PauliOperator(
            a0 * b0 + ax * bx + ay * by + az * bz,
            a0 * bx + b0 * ax + 1j * (ay * bz - az * by),
            a0 * by + b0 * ay + 1j * (az * bx - ax * bz),
            a0 * bz + b0 * az + 1j * (ax * by - ay * bx),
        )

    def scale(self, factor) -> "PauliOperator":
        return PauliOperator(factor * self.c0, factor * self.cx, factor * self.cy, factor * self.cz)

    def dagger(self) -> "PauliOperator":
        return PauliOperator(np.conj(self.c0), np.conj(self.cx), np.conj(self.cy), np.conj(self.cz))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; shape ``(..., 2, 2)`` for array coefficients."""
        c0, cx, cy, cz = (np.asarray(c, dtype=complex)[..., None, None] for c in self.coefficients)
        return c0 * SIGMA_0 + cx * SIGMA_X + cy * SIGMA_Y + cz * SIGMA_Z

    def apply(self, psi) -> np.ndarray:
        """Act on a 2-vector (or stack of 2-vectors along the last axis)."""
        psi = np.asarray(psi, dtype=complex)
        a, b = psi[..., 0], psi[..., 1]
        up = (self.c0 + self.cz) * a + (self.cx - 1j * self.cy) * b
        down = (self.cx + 1j * self.cy) * a + (self.c0 - self.cz) * b
        return np.stack([up, down], axis=-1)

    @property
    def coefficients(self):
        return (self.c0, self.cx, self.cy, self.cz)

    def distance(self, other: "PauliOperator") -> float:
        """Max-abs difference of coefficients."""
        return float(max(np.max(np.abs(np.asarray(a) - np.asarray(b)))
                         for a, b in zip(self.coefficients, other.coefficients)))


def band_arrays(hx, hy):
    """Vectorized eigenphase band.

    Returns ``(E, n, sinE)`` where ``n`` has shape ``(3, ...)``.  At gapless
    points the unit vector is undefined and filled with NaN.
    """
    hx = np.asarray(hx, dtype=float)
    hy = np.asarray(hy, dtype=float)
    cx, sx = np.cos(hx), np.sin(hx)
    cy, sy = np.cos(hy), np.sin(hy)
    a = sx * cy
    b = sy * cx
    c = -sx * sy
    # hypot form avoids cancellation in sqrt(1 - cos^2 E) near the band edges
    sinE = np.sqrt(a * a + b * b + c * c)
    E = np.arctan2(sinE, cx * cy)
    with np.errstate(invalid="ignore", divide="ignore"):
        gapless = sinE < GAP_TOL
        safe = np.where(gapless, 1.0, sinE)
        n = np.stack([a / safe, b / safe, c / safe])
        n = np.where(gapless, np.nan, n)
    return E, n, sinE


def eigenstates_from_n(n, v: int):
    """Floquet eigenstate of ``n.sigma`` with eigenvalue ``v`` (n of shape (3, ...))."""
    nx, ny, nz = n
    primary = 1.0 - v * nz
    use_fallback = primary < GAUGE_TOL
    with np.errstate(invalid="ignore", divide="ignore"):
        norm_p = np.sqrt(2.0 * np.where(use_fallback, 1.0, primary))
        psi_p = np.stack([(nx - 1j * ny) / norm_p, (v - nz) / norm_p + 0j], axis=-1)
        alt = 1.0 + v * nz
        norm_a = np.sqrt(2.0 * np.where(use_fallback, alt, 1.0))
        psi_a = np.stack([(v + nz) / norm_a + 0j, (nx + 1j * ny) / norm_a], axis=-1)
    return np.where(np.asarray(use_fallback)[..., None], psi_a, psi_p)


@dataclass(frozen=True)
class SpectrumSample:
    k: float
    E: float
    n: np.ndarray
    d: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    gapless: bool

    def psi(self, v: int) -> np.ndarray:
        return self.psi_plus if v > 0 else self.psi_minus

    def effective_hamiltonian(self) -> np.ndarray:
        """``H_eff = d.sigma`` as a dense matrix."""
        return self.d[0] * SIGMA_X + self.d[1] * SIGMA_Y + self.d[2] * SIGMA_Z


def spectrum_at(protocol: QuenchProtocol, k: float) -> SpectrumSample:
    """Eigenphase, unit vector and Floquet eigenstates at one quasimomentum."""
    hx, hy = protocol.fields(float(k))
    E, n, sinE = band_arrays(hx, hy)
    E = float(E)
    gapless = bool(sinE < GAP_TOL)
    n = np.asarray(n, dtype=float).reshape(3)
    if gapless:
        psi_p = psi_m = np.full(2, np.nan + 0j)
    else:
        psi_p = eigenstates_from_n(n, +1)
        psi_m = eigenstates_from_n(n, -1)
    return SpectrumSample(k=float(k), E=E, n=n, d=E * n, psi_plus=psi_p,
                          psi_minus=psi_m, gapless=gapless)


def floquet_operator(protocol: QuenchProtocol, k) -> PauliOperator:
    """One-period evolution ``exp(-i h_y sy) exp(-i h_x sx)``."""
    hx, hy = protocol.fields(k)
    cx, sx = np.cos(hx), np.sin(hx)
    cy, sy = np.cos(hy), np.sin(hy)
    return PauliOperator(cx * cy + 0j, -1j * sx * cy, -1j * sy * cx, 1j * sx * sy)


def micromotion_operator(protocol: QuenchProtocol, k, s: float) -> PauliOperator:
    """Evolution from 0 to micromotion time ``s`` in [0, 2)."""
    s = float(s)
    if not 0.0 <= s < PERIOD:
        raise DomainError(f"micromotion time must lie in [0, 2), got {s}")
    hx, hy = protocol.fields(k)
    if s < 1.0:
        return PauliOperator.exp_axis(s * hx, "x")
    back = PauliOperator.exp_axis(-(PERIOD - s) * hy, "y")
    return back @ floquet_operator(protocol, k)


def evolution_operator(protocol: QuenchProtocol, k, t: float) -> PauliOperator:
    """Full product ``U(k, s) U(k)^ell`` for ``t >= 0`` (brute force)."""
    ell, s = split_time(t)
    if ell < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    out = micromotion_operator(protocol, k, s)
    U = floquet_operator(protocol, k)
    for _ in range(ell):
        out = out @ U
    return out


def evolve_eigenstate(protocol: QuenchProtocol, k: float, v: int, t: float) -> np.ndarray:
    """Floquet eigenstate ``|psi_v(k)>`` evolved to time ``t``."""
    v = _band_sign(v)
    sample = spectrum_at(protocol, k)
    if sample.gapless:
        raise DegenerateBandError(k)
    ell, s = split_time(t)
    Ev = v * sample.E
    hx, hy = protocol.fields(float(k))
    psi = sample.psi(v)
    if s < 1.0:
        op = PauliOperator.exp_axis(s * float(hx), "x")
        phase = np.exp(-1j * ell * Ev)
    else:
        op = PauliOperator.exp_axis(-(PERIOD - s) * float(hy), "y")
        phase = np.exp(-1j * (ell + 1) * Ev)
    return phase * op.apply(psi)


def _band_sign(v) -> int:
    if v in (1, "+", "+1"):
        return 1
    if v in (-1, "-", "-1"):
        return -1
    raise DomainError(f"band sign must be +1 or -1, got {v!r}")
