"""Brute-force amplitude solver for a parallel bundle.

Writes every junction relation and every branch relation as one dense linear
system over all amplitudes and solves it with an SVD. It shares no code with
the composer and is meant as ground truth, not for speed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .composer import ParallelAssembly
from .errors import SingularSystem

log = logging.getLogger(__name__)

# indices of the lead amplitudes in the unknown vector
U, V, UP, VP = 0, 1, 2, 3


@dataclass(frozen=True)
class AmplitudeSolution:
    u: complex
    v: complex
    u_prime: complex
    v_prime: complex
    branch_states: tuple[tuple[complex, complex], ...]
    residual: float


def amplitude_equations(a: ParallelAssembly) -> np.ndarray:
    """Coefficient matrix E with ``E @ z = 0``.

    ``z = [u, v, u', v', u_1..u_N, v_1..v_N]`` where ``(u_i, v_i)`` sit at
    the splitter end of branch i. Far-end amplitudes are eliminated through
    ``[u'_i, v'_i] = M_i^-1 [u_i, v_i]``.
    """
    n = a.n_branches
    sp, mg = a.splitter, a.merger
    inv = np.linalg.inv(a.branches)
    iu = 4 + np.arange(n)
    iv = 4 + n + np.arange(n)
    e = np.zeros((2 * n + 2, 2 * n + 4), dtype=complex)

    # splitter lead: v = alpha u + beta sum_j v_j
    e[0, V] = 1
    e[0, U] = -sp.alpha
    e[0, iv] = -sp.beta
    # splitter branches: u_i = beta u + sum_j s_ij v_j
    for i in range(n):
        row = 1 + i
        e[row, iu[i]] = 1
        e[row, U] = -sp.beta
        e[row, iv] -= sp.s[i]

    # far-end amplitude u'_j as a row over (u_j, v_j)
    far_u = inv[:, 0, :]
    far_v = inv[:, 1, :]
    # merger lead: u' = alpha' v' + beta' sum_j u'_j
    row = n + 1
    e[row, UP] = 1
    e[row, VP] = -mg.alpha
    e[row, iu] -= mg.beta * far_u[:, 0]
    e[row, iv] -= mg.beta * far_u[:, 1]
    # merger branches: v'_i = beta' v' + sum_j s'_ij u'_j
    for i in range(n):
        row = n + 2 + i
        e[row, iu[i]] += far_v[i, 0]
        e[row, iv[i]] += far_v[i, 1]
        e[row, VP] = -mg.beta
        e[row, iu] -= mg.s[i] * far_u[:, 0]
        e[row, iv] -= mg.s[i] * far_u[:, 1]
    return e


def _solve(a: ParallelAssembly, given: dict[int, complex], rcond: float = 1e-12) -> np.ndarray:
    e = amplitude_equations(a)
    n_unknown = e.shape[1]
    fixed = np.array(sorted(given), dtype=int)
    free = np.setdiff1d(np.arange(n_unknown), fixed)
    rhs = -e[:, fixed] @ np.array([given[i] for i in fixed], dtype=complex)
    lhs = e[:, free]

    u_svd, sv, vh = np.linalg.svd(lhs)
    cutoff = rcond * sv[0]
    rank = int(np.sum(sv > cutoff))
    # a null space is harmless only if it cannot move the lead amplitudes
    lead_cols = np.flatnonzero(np.isin(free, [U, V, UP, VP]))
    if rank < len(free):
        null = vh[rank:].conj().T
        if np.max(np.abs(null[lead_cols])) > 1e-8:
            raise SingularSystem(f"amplitude system is rank deficient ({rank}/{len(free)})")
        log.debug("decoupled null space of dimension %d ignored", len(free) - rank)
    coeffs = (u_svd[:, :rank].conj().T @ rhs) / sv[:rank]
    x_free = vh[:rank].conj().T @ coeffs

    z = np.empty(n_unknown, dtype=complex)
    z[fixed] = [given[i] for i in fixed]
    z[free] = x_free
    residual = float(np.max(np.abs(e @ z))) if e.size else 0.0
    scale = max(1.0, float(np.max(np.abs(z))))
    if residual > 1e-9 * scale:
        raise SingularSystem(f"amplitude system is inconsistent (residual {residual:.3e})")
    return z


def _as_solution(a: ParallelAssembly, z: np.ndarray) -> AmplitudeSolution:
    n = a.n_branches
    states = tuple((complex(z[4 + i]), complex(z[4 + n + i])) for i in range(n))
    residual = float(np.max(np.abs(amplitude_equations(a) @ z)))
    return AmplitudeSolution(complex(z[U]), complex(z[V]), complex(z[UP]), complex(z[VP]), states, residual)


def solve_amplitudes(a: ParallelAssembly, boundary: tuple[complex, complex] = (1.0, 0.0)) -> AmplitudeSolution:
    """All amplitudes for incoming ``u`` from the left and ``v'`` from the right."""
    u_in, vp_in = boundary
    return _as_solution(a, _solve(a, {U: complex(u_in), VP: complex(vp_in)}))


def solve_from_right(a: ParallelAssembly, right_state: tuple[complex, complex]) -> AmplitudeSolution:
    """All amplitudes for a prescribed right-lead state ``(u', v')``."""
    up, vp = right_state
    return _as_solution(a, _solve(a, {UP: complex(up), VP: complex(vp)}))


def oracle_transfer_matrix(a: ParallelAssembly) -> np.ndarray:
    """Transfer matrix assembled column by column from two right-lead states."""
    m = np.empty((2, 2), dtype=complex)
    for col, state in enumerate([(1.0, 0.0), (0.0, 1.0)]):
        sol = solve_from_right(a, state)
        m[:, col] = (sol.u, sol.v)
    return m
