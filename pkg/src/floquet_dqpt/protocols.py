"""Periodically quenched chiral two-band protocols.

Within one driving period ``T = 2`` the Bloch Hamiltonian is

    H(k, t) = h_x(k) sigma_x    for s in [0, 1)
              h_y(k) sigma_y    for s in [1, 2)

with ``t = s + 2*ell``.  A :class:`QuenchProtocol` bundles the two quench
functions together with the k-space symmetries that downstream code is
allowed to exploit.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ParameterError

PERIOD = 2.0
SYMMETRY_TOL = 1e-12

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ProtocolKind(str, enum.Enum):
    PQL = "pql"
    CUSTOM = "custom"


@dataclass(frozen=True)
class QuenchProtocol:
    """Pair of quench functions with declared k-space symmetries.

    ``h_x`` and ``h_y`` must accept numpy arrays of quasimomenta and return
    real arrays of the same shape.  Declared symmetries are checked on random
    samples at construction time.
    """

    kind: ProtocolKind
    params: Mapping[str, float]
    h_x: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    h_y: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    translation_by_pi: bool = False
    reflection: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        _verify_symmetries(self)

    def fields(self, k):
        """Return ``(h_x(k), h_y(k))`` as float arrays."""
        k = np.asarray(k, dtype=float)
        return (np.asarray(self.h_x(k), dtype=float) + 0.0 * k,
                np.asarray(self.h_y(k), dtype=float) + 0.0 * k)

    @property
    def symmetric(self) -> bool:
        """True when both translation-by-pi and reflection hold."""
        return self.translation_by_pi and self.reflection

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": {key: float(val) for key, val in sorted(self.params.items())},
            "translation_by_pi": self.translation_by_pi,
            "reflection": self.reflection,
        }


def _verify_symmetries(protocol: QuenchProtocol, n_samples: int = 257, seed: int = 0):
    if not (protocol.translation_by_pi or protocol.reflection):
        return
    rng = np.random.default_rng(seed)
    k = rng.uniform(-np.pi, np.pi, n_samples)
    hx, hy = protocol.fields(k)
    if protocol.translation_by_pi:
        hx_shift, hy_shift = protocol.fields(k + np.pi)
        err = max(np.max(np.abs(hx_shift + hx)), np.max(np.abs(hy_shift + hy)))
        if err >= SYMMETRY_TOL * max(1.0, np.max(np.abs(hx)), np.max(np.abs(hy))):
            raise ParameterError(f"declared translation_by_pi symmetry violated (max error {err:.3e})")
    if protocol.reflection:
        hx_ref, hy_ref = protocol.fields(-k)
        err = max(np.max(np.abs(hx_ref - hx)), np.max(np.abs(hy_ref + hy)))
        if err >= SYMMETRY_TOL * max(1.0, np.max(np.abs(hx)), np.max(np.abs(hy))):
            raise ParameterError(f"declared reflection symmetry violated (max error {err:.3e})")


def _scaled_cos(amplitude, k):
    return amplitude * np.cos(k)


def _scaled_sin(amplitude, k):
    return amplitude * np.sin(k)


def make_pql(J_x: float, J_y: float) -> QuenchProtocol:
    """Piecewise quenched lattice: ``h_x = J_x cos k``, ``h_y = J_y sin k``."""
    J_x, J_y = float(J_x), float(J_y)
    if not (np.isfinite(J_x) and np.isfinite(J_y)) or J_x <= 0 or J_y <= 0:
        raise ParameterError(f"PQL amplitudes must be positive, got J_x={J_x}, J_y={J_y}")
    return QuenchProtocol(
        kind=ProtocolKind.PQL,
        params={"J_x": J_x, "J_y": J_y},
        h_x=functools.partial(_scaled_cos, J_x),
        h_y=functools.partial(_scaled_sin, J_y),
        translation_by_pi=True,
        reflection=True,
    )


def make_custom(h_x, h_y, *, translation_by_pi=False, reflection=False, params=None) -> QuenchProtocol:
    """Wrap user-supplied quench functions; declared symmetries are verified."""
    return QuenchProtocol(
        kind=ProtocolKind.CUSTOM,
        params=params or {},
        h_x=h_x,
        h_y=h_y,
        translation_by_pi=translation_by_pi,
        reflection=reflection,
    )


def split_time(t):
    """Decompose ``t = s + 2*ell`` with integer ``ell`` and ``s`` in [0, 2)."""
    t = np.asarray(t, dtype=float)
    ell = np.floor(t / PERIOD)
    s = t - PERIOD * ell
    # guard against s == 2.0 from rounding of tiny negative t
    wrap = s >= PERIOD
    ell = np.where(wrap, ell + 1, ell)
    s = np.where(wrap, s - PERIOD, s)
    if ell.ndim == 0:
        return int(ell), float(s)
    return ell.astype(int), s


def hamiltonian_at(protocol: QuenchProtocol, k: float, t: float) -> np.ndarray:
    """2x2 Bloch Hamiltonian at quasimomentum ``k`` and time ``t``."""
    _, s = split_time(t)
    hx, hy = protocol.fields(k)
    if s < 1.0:
        return float(hx) * SIGMA_X
    return float(hy) * SIGMA_Y
