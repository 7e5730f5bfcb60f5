"""Transfer matrix of N two-terminal scatterers connected in parallel.

The branches hang between a splitting junction and a merging junction. Branch
states ``psi_i = [u_i, v_i]`` (taken at the splitter end) are all tied to a
reference branch K through 2x2 coupling matrices, ``psi_i = L_iK psi_K``. The
lead states then follow as ``[u, v] = T_K psi_K`` and
``[u', v'] = T'_K M_K^-1 psi_K``, so the composite matrix is
``M = T_K M_K T'_K^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FastPathInapplicable,
    InvalidAssembly,
    SingularMatrix,
    SingularSystem,
)
from .junctions import JunctionSpec, check_junction, is_symmetric_pattern, u_matrices
from .numerics import (
    DEFAULT_TOL,
    IDENTITY,
    Tolerances,
    TransferMatrix2,
    block_solve,
    det2,
    mat2_inv,
    norm_inf,
)


@dataclass(frozen=True, eq=False)
class ParallelAssembly:
    """Splitter, merger and the ordered branch matrices between them.

    ``reference_k`` is a 0-based branch index and defaults to the last branch.
    Branch matrices must be unimodular (``| |det| - 1 | <= tol.det``).
    """

    splitter: JunctionSpec
    merger: JunctionSpec
    branches: np.ndarray
    reference_k: int | None = None
    tol: Tolerances = field(default=DEFAULT_TOL)

    def __post_init__(self):
        branches = np.array(self.branches, dtype=complex)
        if branches.ndim != 3 or branches.shape[1:] != (2, 2):
            raise InvalidAssembly(f"branches must have shape (N, 2, 2), got {branches.shape}")
        n = branches.shape[0]
        if n < 1:
            raise InvalidAssembly("an assembly needs at least one branch")
        if not np.all(np.isfinite(branches)):
            raise InvalidAssembly("branch matrices have non-finite entries")
        if self.splitter.n_branches != n or self.merger.n_branches != n:
            raise InvalidAssembly(
                f"junction sizes (splitter {self.splitter.n_branches}, merger "
                f"{self.merger.n_branches}) do not match {n} branches"
            )
        for i, m in enumerate(branches):
            d = det2(m)
            if abs(abs(d) - 1) > self.tol.det:
                raise InvalidAssembly(f"branch {i}: |det| = {abs(d):.12g} is not 1")
        check_junction(self.splitter, self.tol)
        check_junction(self.merger, self.tol)
        k = n - 1 if self.reference_k is None else self.reference_k
        if int(k) != k or not 0 <= k < n:
            raise InvalidAssembly(f"reference branch {self.reference_k!r} outside [0, {n - 1}]")
        branches.setflags(write=False)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "reference_k", int(k))

    @property
    def n_branches(self) -> int:
        return self.branches.shape[0]

    def with_reference(self, k: int) -> "ParallelAssembly":
        return ParallelAssembly(self.splitter, self.merger, self.branches, k, self.tol)


@dataclass(frozen=True)
class CouplingSet:
    l: np.ndarray
    condition_estimate: float


def q_matrix(
    i: int, ref: int, splitter: JunctionSpec, merger: JunctionSpec, m_i: TransferMatrix2,
    tol: Tolerances = DEFAULT_TOL,
) -> TransferMatrix2:
    """Coefficient of branch ``i`` in the difference relation between branches ``i`` and ``ref``.

    Row 1 comes from the splitter, row 2 from the merger with the far-end
    amplitudes expressed through ``m_i^-1``. Swapping the arguments gives the
    block multiplying the reference branch.
    """
    s, sp = splitter.s, merger.s
    n = mat2_inv(m_i, tol)
    c = sp[i, i] - sp[ref, i]
    return np.array(
        [
            [1, -s[i, i] + s[ref, i]],
            [n[1, 0] - c * n[0, 0], n[1, 1] - c * n[0, 1]],
        ],
        dtype=complex,
    )


def gamma_coupling(
    i: int, ref: int, k: int, splitter: JunctionSpec, merger: JunctionSpec, m_k: TransferMatrix2,
    tol: Tolerances = DEFAULT_TOL,
) -> TransferMatrix2:
    """Cross-coupling of a third branch ``k`` into the (i, ref) difference relation.

    For a unit-determinant ``m_k`` the second row is ``d * [m22, -m12]`` with
    ``d = s'_ik - s'_ref,k``.
    """
    s, sp = splitter.s, merger.s
    n = mat2_inv(m_k, tol)
    d = sp[i, k] - sp[ref, k]
    return np.array([[0, s[i, k] - s[ref, k]], [d * n[0, 0], d * n[0, 1]]], dtype=complex)


def _cross_terms_vanish(a: ParallelAssembly, atol: float = 1e-14) -> bool:
    ref = a.reference_k
    for j in (a.splitter, a.merger):
        diff = j.s - j.s[ref]
        others = np.ones(a.n_branches, dtype=bool)
        others[ref] = False
        for i in np.flatnonzero(others):
            mask = others.copy()
            mask[i] = False
            if np.any(np.abs(diff[i, mask]) > atol):
                return False
    return True


def coupling_matrices(a: ParallelAssembly, *, fast_path: bool = True) -> CouplingSet:
    """Coupling matrices ``L_iK`` with ``psi_i = L_iK psi_K`` and ``L_KK = I``.

    Each non-reference branch contributes one block row
    ``Q_{i|K} psi_i - sum_k Gamma_{iK,k} psi_k = Q_{K|i} psi_K``.
    When no cross terms survive the rows decouple and
    ``L_iK = Q_{i|K}^-1 Q_{K|i}``.
    """
    n = a.n_branches
    ref = a.reference_k
    tol = a.tol
    out = np.empty((n, 2, 2), dtype=complex)
    out[ref] = IDENTITY
    others = [i for i in range(n) if i != ref]
    if not others:
        return CouplingSet(out, 1.0)
    sp, mg, br = a.splitter, a.merger, a.branches

    rhs = np.array([q_matrix(ref, i, sp, mg, br[ref], tol) for i in others])
    if fast_path and _cross_terms_vanish(a):
        cond = 1.0
        for row, i in enumerate(others):
            q = q_matrix(i, ref, sp, mg, br[i], tol)
            try:
                out[i] = mat2_inv(q, tol) @ rhs[row]
            except SingularMatrix as exc:
                raise SingularSystem(f"coupling block for branch {i} is singular: {exc.message}") from None
            cond = max(cond, float(np.linalg.norm(q, 1) * np.linalg.norm(mat2_inv(q, tol), 1)))
        return CouplingSet(out, cond)

    blocks = np.zeros((len(others), len(others), 2, 2), dtype=complex)
    for row, i in enumerate(others):
        for col, k in enumerate(others):
            if k == i:
                blocks[row, col] = q_matrix(i, ref, sp, mg, br[i], tol)
            else:
                blocks[row, col] = -gamma_coupling(i, ref, k, sp, mg, br[k], tol)
    x, cond = block_solve(blocks, rhs, tol, return_condition=True)
    for row, i in enumerate(others):
        out[i] = x[row]
    return CouplingSet(out, cond)


def _identical(a: ParallelAssembly) -> bool:
    first = a.branches[0]
    return bool(np.all(a.branches == first)) and is_symmetric_pattern(a.splitter) and is_symmetric_pattern(a.merger)


def compose_parallel(a: ParallelAssembly, *, fast_path: bool = True) -> TransferMatrix2:
    """Composite transfer matrix of the parallel bundle.

    With ``fast_path`` (the default) bundles of bit-identical branches between
    permutation-symmetric junctions skip the coupling solve, since every
    ``L_iK`` is then the identity. This also keeps such bundles finite at
    wavenumbers where the coupling blocks themselves are singular.
    """
    if fast_path and a.n_branches > 1 and _identical(a):
        return identical_fast_path(a.splitter, a.branches[0], a.n_branches, merger=a.merger, tol=a.tol)
    tol = a.tol
    coupling = coupling_matrices(a, fast_path=fast_path).l
    u = u_matrices(a.splitter, "splitter", tol)
    up = u_matrices(a.merger, "merger", tol)
    return _assemble(u, up, coupling, a.branches, a.reference_k, tol)


# T'_K can be far worse conditioned than the composite itself, so the final
# 2x2 algebra runs in extended precision (plain double where the platform
# has no wider type).
_EXT = np.clongdouble


def _det_ext(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def _inv_ext(m: np.ndarray) -> np.ndarray:
    adj = np.empty_like(m)
    adj[..., 0, 0], adj[..., 1, 1] = m[..., 1, 1], m[..., 0, 0]
    adj[..., 0, 1], adj[..., 1, 0] = -m[..., 0, 1], -m[..., 1, 0]
    return adj / _det_ext(m)[..., None, None]


def _assemble(u, up, coupling, branches, ref: int, tol: Tolerances) -> TransferMatrix2:
    """``T_K M_K T'_K^-1`` with ``T_K = sum U_j L_j`` and ``T'_K = sum U'_j M_j^-1 L_j M_K``."""
    u, up, l, br = (np.asarray(x, dtype=_EXT) for x in (u, up, coupling, branches))
    t = np.einsum("jab,jbc->ac", u, l)
    tp = np.einsum("jab,jbc,jcd->ad", up, _inv_ext(br), l) @ br[ref]
    scale = norm_inf(tp.astype(complex))
    d = _det_ext(tp)
    if scale == 0.0 or abs(complex(d)) <= tol.singular * scale * scale:
        raise SingularMatrix(f"merger-side reduction matrix is singular (|det| = {abs(complex(d)):.3e})")
    return (t @ br[ref] @ _inv_ext(tp)).astype(complex)


def identical_fast_path(
    junction: JunctionSpec,
    m: TransferMatrix2,
    n: int,
    *,
    merger: JunctionSpec | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> TransferMatrix2:
    """Composite of ``n`` copies of ``m`` as the similarity-type product ``T m T'^-1``.

    ``T`` and ``T'`` are the sums of the splitter and merger U matrices. For the
    canonical symmetric junction both equal ``(1/beta) [[1, alpha], [alpha, 1]]``.
    """
    merger = junction if merger is None else merger
    for name, j in (("splitter", junction), ("merger", merger)):
        if j.n_branches != n:
            raise FastPathInapplicable(f"{name} has {j.n_branches} branches, expected {n}")
        if not is_symmetric_pattern(j):
            raise FastPathInapplicable(f"{name} is not permutation-symmetric")
    m = np.asarray(m, dtype=complex)
    t = u_matrices(junction, "splitter", tol).sum(axis=0)
    tp = u_matrices(merger, "merger", tol).sum(axis=0)
    return t @ m @ mat2_inv(tp, tol)
