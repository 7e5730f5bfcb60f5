"""(N+1)-terminal junctions joining one lead to N branches.

The scattering matrix is laid out with the lead first::

    [v, u_1, ..., u_N] = [[alpha, beta ... beta],
                          [beta,  s_11 ... s_1N ],
                          ...
                          [beta,  s_N1 ... s_NN ]] @ [u, v_1, ..., v_N]

For the merging junction the roles of incoming/outgoing swap but the layout
is the same.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateLead, InvalidJunction
from .numerics import DEFAULT_TOL, Tolerances, Cx


@dataclass(frozen=True, eq=False)
class JunctionSpec:
    alpha: complex
    beta: complex
    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise InvalidJunction(f"branch block must be a non-empty square matrix, got shape {s.shape}")
        alpha, beta = complex(self.alpha), complex(self.beta)
        if not (np.isfinite(alpha) and np.isfinite(beta) and np.all(np.isfinite(s))):
            raise InvalidJunction("junction has non-finite entries")
        s.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "s", s)

    @property
    def n_branches(self) -> int:
        return self.s.shape[0]

    def matrix(self) -> np.ndarray:
        n = self.n_branches
        full = np.empty((n + 1, n + 1), dtype=complex)
        full[0, 0] = self.alpha
        full[0, 1:] = self.beta
        full[1:, 0] = self.beta
        full[1:, 1:] = self.s
        return full

    @classmethod
    def from_matrix(cls, full, atol: float = 1e-12) -> "JunctionSpec":
        """Split a full scattering matrix; the lead row and column must share one beta."""
        full = np.asarray(full, dtype=complex)
        if full.ndim != 2 or full.shape[0] != full.shape[1] or full.shape[0] < 2:
            raise InvalidJunction(f"expected an (N+1)x(N+1) matrix with N >= 1, got {full.shape}")
        beta = full[0, 1]
        lead = np.concatenate([full[0, 1:], full[1:, 0]])
        if np.max(np.abs(lead - beta)) > atol:
            raise InvalidJunction("lead coupling is not uniform across branches")
        return cls(full[0, 0], beta, full[1:, 1:])

    def __eq__(self, other):
        if not isinstance(other, JunctionSpec):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.beta == other.beta
            and self.s.shape == other.s.shape
            and bool(np.array_equal(self.s, other.s))
        )

    def __hash__(self):
        return hash((self.alpha, self.beta, self.s.tobytes()))

    def __repr__(self):
        return f"JunctionSpec(alpha={self.alpha!r}, beta={self.beta!r}, s={self.s.tolist()!r})"


@dataclass(frozen=True)
class JunctionDiagnostics:
    unitarity_residual: float
    gamma: tuple[Cx, ...]
    is_symmetric_family: bool


def symmetric_parameters(n: int) -> tuple[float, float, float, float]:
    """(alpha, beta, a, b) of the permutation-symmetric junction with beta > 0."""
    if int(n) != n or n < 1:
        raise InvalidJunction(f"branch count must be a positive integer, got {n!r}")
    alpha = (1 - n) / (n + 1)
    beta = 2 / (n + 1)
    return alpha, beta, alpha, beta


def symmetric_junction(n: int) -> JunctionSpec:
    """Permutation-symmetric junction with alpha = a = (1-N)/(N+1), beta = b = 2/(N+1)."""
    alpha, beta, a, b = symmetric_parameters(n)
    s = np.full((int(n), int(n)), b, dtype=complex)
    np.fill_diagonal(s, a)
    return JunctionSpec(alpha, beta, s)


def symmetric_constraints(n: int, alpha, beta, a, b) -> np.ndarray:
    """Residuals of the four algebraic constraints tying (alpha, beta, a, b) to N."""
    return np.array(
        [
            alpha**2 + n * beta**2 - 1,
            alpha + a + (n - 1) * b,
            beta**2 + a**2 + (n - 1) * b**2 - 1,
            beta**2 + 2 * a * b + (n - 2) * b**2,
        ]
    )


def is_symmetric_pattern(j: JunctionSpec, atol: float = 1e-12) -> bool:
    """True when s has one value on the diagonal and one value off it."""
    s = j.s
    n = j.n_branches
    diag = np.diag(s)
    if np.max(np.abs(diag - diag[0])) > atol:
        return False
    if n == 1:
        return True
    off = s[~np.eye(n, dtype=bool)]
    return bool(np.max(np.abs(off - off[0])) <= atol)


def gamma_sums(j: JunctionSpec) -> np.ndarray:
    """Column sums of the branch block."""
    return j.s.sum(axis=0)


def validate_junction(j: JunctionSpec) -> JunctionDiagnostics:
    full = j.matrix()
    residual = np.abs(full.conj().T @ full - np.eye(full.shape[0]))
    return JunctionDiagnostics(
        unitarity_residual=float(np.max(np.sum(residual, axis=1))),
        gamma=tuple(complex(g) for g in gamma_sums(j)),
        is_symmetric_family=is_symmetric_pattern(j),
    )


def check_junction(j: JunctionSpec, tol: Tolerances = DEFAULT_TOL) -> None:
    """Raise unless ``j`` is unitary with a coupled lead."""
    if abs(j.beta) <= tol.singular:
        raise DegenerateLead(f"|beta| = {abs(j.beta):.3e} is too small")
    residual = validate_junction(j).unitarity_residual
    if residual > tol.unitary:
        raise InvalidJunction(f"junction is not unitary (residual {residual:.3e} > {tol.unitary})")


def u_matrices(
    j: JunctionSpec, side: Literal["splitter", "merger"], tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """Per-branch 2x2 matrices that sum branch states back to the lead state.

    Splitter: ``[u, v] = sum_j U_j [u_j, v_j]``.
    Merger: ``[u', v'] = sum_j U'_j [u'_j, v'_j]``, normalised by the merger's own beta.
    """
    if abs(j.beta) <= tol.singular:
        raise DegenerateLead(f"|beta| = {abs(j.beta):.3e} is too small")
    n = j.n_branches
    alpha, beta = j.alpha, j.beta
    g = gamma_sums(j)
    out = np.empty((n, 2, 2), dtype=complex)
    if side == "splitter":
        out[:, 0, 0] = 1
        out[:, 0, 1] = -g
        out[:, 1, 0] = alpha
        out[:, 1, 1] = n * beta**2 - alpha * g
    elif side == "merger":
        out[:, 0, 0] = n * beta**2 - alpha * g
        out[:, 0, 1] = alpha
        out[:, 1, 0] = -g
        out[:, 1, 1] = 1
    else:
        raise ValueError(f"side must be 'splitter' or 'merger', got {side!r}")
    return out / (n * beta)


def _haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary_junction(
    n: int, rng: np.random.Generator, min_beta: float = 0.15
) -> JunctionSpec:
    """Random unitary junction with uniform lead coupling.

    Built as ``(1 + A) (u + 1_perp) (1 + B)`` where ``u`` is a 2x2 unitary on
    the span of the lead and the uniform branch vector ``w``, and A, B are
    random unitaries on branch space that fix ``w``.
    """
    if n < 1:
        raise InvalidJunction("need at least one branch")
    w = np.ones(n, dtype=complex) / np.sqrt(n)
    # orthonormal basis of branch space whose first column is w
    basis = np.column_stack([w, rng.standard_normal((n, n - 1)) + 1j * rng.standard_normal((n, n - 1))])
    q, r = np.linalg.qr(basis)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    q[:, 0] = w
    perp = q[:, 1:]

    def fixing_w() -> np.ndarray:
        if n == 1:
            return np.ones((1, 1), dtype=complex)
        return np.outer(w, w.conj()) + perp @ _haar_unitary(rng, n - 1) @ perp.conj().T

    # 2x2 unitary on span{lead, w}: [[alpha, c], [c, d]] with c = sqrt(n) * beta
    mag_c = rng.uniform(min_beta * np.sqrt(n), 1.0)
    mag_c = min(mag_c, 1.0)
    alpha = np.sqrt(1 - mag_c**2) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    c = mag_c * np.exp(1j * rng.uniform(0, 2 * np.pi))
    d = -np.conj(alpha) * c / np.conj(c)

    lead_w = np.zeros((n + 1, 2), dtype=complex)
    lead_w[0, 0] = 1
    lead_w[1:, 1] = w
    proj = lead_w @ lead_w.conj().T
    core = lead_w @ np.array([[alpha, c], [c, d]]) @ lead_w.conj().T + (np.eye(n + 1) - proj)

    left = np.eye(n + 1, dtype=complex)
    left[1:, 1:] = fixing_w()
    right = np.eye(n + 1, dtype=complex)
    right[1:, 1:] = fixing_w()
    full = left @ core @ right
    return JunctionSpec.from_matrix(full, atol=1e-10)
