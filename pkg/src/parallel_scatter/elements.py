"""Primitive two-terminal scatterers.

Every element maps a wavenumber to a transfer matrix relating the
(right-going, left-going) amplitudes on its left to those on its right::

    [u, v]_left = M @ [u', v']_right
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidElement
from .numerics import DEFAULT_TOL, Tolerances, TransferMatrix2, det2


def _finite(name: str, *values: float) -> None:
    for value in values:
        if not math.isfinite(value):
            raise InvalidElement(f"{name}: parameter {value!r} is not finite")


@dataclass(frozen=True)
class FreeSegment:
    length: float

    def __post_init__(self):
        _finite("FreeSegment", self.length)
        if self.length < 0:
            raise InvalidElement(f"FreeSegment: length must be >= 0, got {self.length}")


@dataclass(frozen=True)
class DirectionalPhaseSegment:
    """Segment whose two propagation directions pick up independent phases.

    The matrix is ``diag(exp(i*phi_plus), exp(-i*phi_minus))``; its
    determinant is the unimodular phase ``exp(i*(phi_plus - phi_minus))``.
    """

    phi_plus: float
    phi_minus: float

    def __post_init__(self):
        _finite("DirectionalPhaseSegment", self.phi_plus, self.phi_minus)

    @classmethod
    def from_wavenumbers(cls, k_plus: float, k_minus: float, length: float) -> "DirectionalPhaseSegment":
        return cls(k_plus * length, k_minus * length)


@dataclass(frozen=True)
class DeltaBarrier:
    """Point scatterer ``strength * delta(x)`` in units where the kinetic term is ``-d^2/dx^2``.

    At wavenumber k the dimensionless strength is ``omega = strength / (2k)``.
    """

    strength: float

    def __post_init__(self):
        _finite("DeltaBarrier", self.strength)


@dataclass(frozen=True)
class Custom:
    """Fixed, wavenumber-independent transfer matrix (stored as a 4-tuple)."""

    entries: tuple[complex, complex, complex, complex]

    def __post_init__(self):
        if len(self.entries) != 4:
            raise InvalidElement("Custom: expected four entries m11, m12, m21, m22")
        values = tuple(complex(z) for z in self.entries)
        for z in values:
            _finite("Custom", z.real, z.imag)
        object.__setattr__(self, "entries", values)
        d = det2(self.matrix)
        if abs(d - 1) > DEFAULT_TOL.det:
            raise InvalidElement(f"Custom: |det - 1| = {abs(d - 1):.3e} exceeds {DEFAULT_TOL.det}")

    @classmethod
    def from_matrix(cls, m) -> "Custom":
        m = np.asarray(m, dtype=complex)
        return cls((m[0, 0], m[0, 1], m[1, 0], m[1, 1]))

    @property
    def matrix(self) -> TransferMatrix2:
        return np.array(self.entries, dtype=complex).reshape(2, 2)


ElementSpec = Union[FreeSegment, DirectionalPhaseSegment, DeltaBarrier, Custom]


def free_matrix(phase: float) -> TransferMatrix2:
    return np.array([[np.exp(-1j * phase), 0], [0, np.exp(1j * phase)]], dtype=complex)


def delta_matrix(omega: float) -> TransferMatrix2:
    """Transfer matrix of a delta scatterer with dimensionless strength ``omega``.

    Obtained from continuity of the wavefunction and the derivative jump
    ``psi'(0+) - psi'(0-) = 2 k omega psi(0)``.
    """
    return np.array([[1 + 1j * omega, 1j * omega], [-1j * omega, 1 - 1j * omega]], dtype=complex)


def element_transfer(spec: ElementSpec, k: float) -> TransferMatrix2:
    match spec:
        case FreeSegment(length=length):
            _check_k(spec, k)
            return free_matrix(k * length)
        case DirectionalPhaseSegment(phi_plus=p, phi_minus=q):
            return np.array([[np.exp(1j * p), 0], [0, np.exp(-1j * q)]], dtype=complex)
        case DeltaBarrier(strength=g):
            _check_k(spec, k)
            return delta_matrix(g / (2.0 * k))
        case Custom():
            return spec.matrix
    raise InvalidElement(f"unknown element {spec!r}")


def _check_k(spec, k: float) -> None:
    if not (math.isfinite(k) and k > 0):
        raise InvalidElement(f"{type(spec).__name__} requires a finite k > 0, got {k!r}")


def is_flux_conserving(m: TransferMatrix2, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when ``|t|^2 + |r|^2 = 1`` for left incidence and ``|det| = 1``."""
    m11 = m[0, 0]
    if abs(m11) <= tol.singular:
        return False
    t2 = 1 / abs(m11) ** 2
    r2 = abs(m[1, 0]) ** 2 * t2
    return abs(t2 + r2 - 1) <= tol.det and abs(abs(det2(m)) - 1) <= tol.det


def random_flux_conserving(rng: np.random.Generator, max_rapidity: float = 1.5) -> TransferMatrix2:
    """Random unit-determinant flux-conserving matrix ``[[a, b], [b*, a*]]``."""
    eta = rng.uniform(0, max_rapidity)
    th1, th2 = rng.uniform(0, 2 * np.pi, size=2)
    a = np.cosh(eta) * np.exp(1j * th1)
    b = np.sinh(eta) * np.exp(1j * th2)
    return np.array([[a, b], [np.conj(b), np.conj(a)]], dtype=complex)
