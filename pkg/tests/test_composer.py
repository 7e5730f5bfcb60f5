import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closed_forms import equal_arms, ring_l12, ring_m11_m12
from conftest import random_assembly
from parallel_scatter.composer import (
    ParallelAssembly,
    compose_parallel,
    coupling_matrices,
    gamma_coupling,
    identical_fast_path,
    q_matrix,
)
from parallel_scatter.elements import FreeSegment, element_transfer, random_flux_conserving
from parallel_scatter.errors import FastPathInapplicable, InvalidAssembly, SingularityError
from parallel_scatter.junctions import JunctionSpec, random_unitary_junction, symmetric_junction
from parallel_scatter.numerics import det2
from parallel_scatter.oracle import oracle_transfer_matrix, solve_amplitudes
from parallel_scatter.transport import transmission


def free(length, k):
    return element_transfer(FreeSegment(length), k)


def ring(k, l1=1.0, l2=2.0, ref=None):
    j = symmetric_junction(2)
    return ParallelAssembly(j, j, np.array([free(l1, k), free(l2, k)]), ref)


def test_q_matrix_ring():
    k, l1 = 0.83, 1.3
    j = symmetric_junction(2)
    q = q_matrix(0, 1, j, j, free(l1, k))
    expected = [[1, 1], [np.exp(1j * k * l1), np.exp(-1j * k * l1)]]
    np.testing.assert_allclose(q, expected, atol=1e-15)


def test_q_matrix_role_swap_symmetric_identical():
    j = symmetric_junction(4)
    m = random_flux_conserving(np.random.default_rng(3))
    np.testing.assert_allclose(q_matrix(1, 3, j, j, m), q_matrix(3, 1, j, j, m), atol=1e-15)


def test_q_matrix_matches_adjugate_entries_for_unit_det(rng):
    """With det(M_i) = 1 the second row is [-m21 - c m22, m11 + c m12]."""
    sp, mg = random_unitary_junction(3, rng), random_unitary_junction(3, rng)
    m = random_flux_conserving(rng)
    c = mg.s[0, 0] - mg.s[2, 0]
    expected = [
        [1, -sp.s[0, 0] + sp.s[2, 0]],
        [-m[1, 0] - c * m[1, 1], m[0, 0] + c * m[0, 1]],
    ]
    np.testing.assert_allclose(q_matrix(0, 2, sp, mg, m), expected, atol=1e-14)


def test_gamma_vanishes_for_symmetric(rng):
    j = symmetric_junction(5)
    for _ in range(5):
        m = random_flux_conserving(rng)
        assert np.abs(gamma_coupling(0, 4, 2, j, j, m)).max() == 0


def test_gamma_vanishes_when_rows_agree(rng):
    s = random_unitary_junction(4, rng).s.copy()
    s[0, 2] = s[3, 2]
    sp = JunctionSpec(0.1, 0.2, s)
    mg = JunctionSpec(0.1, 0.2, s)
    assert np.abs(gamma_coupling(0, 3, 2, sp, mg, random_flux_conserving(rng))).max() == 0


def _pair_residual(a, sol, gamma_fn):
    """Residual of Q_{i|K} psi_i - Q_{K|i} psi_K - sum_k Gamma_{iK,k} psi_k over all i != K."""
    psi = np.array(sol.branch_states)
    ref, sp, mg, br = a.reference_k, a.splitter, a.merger, a.branches
    worst = 0.0
    for i in range(a.n_branches):
        if i == ref:
            continue
        lhs = q_matrix(i, ref, sp, mg, br[i]) @ psi[i] - q_matrix(ref, i, sp, mg, br[ref]) @ psi[ref]
        for k in range(a.n_branches):
            if k not in (i, ref):
                lhs -= gamma_fn(i, ref, k, sp, mg, br[k]) @ psi[k]
        worst = max(worst, np.abs(lhs).max())
    return worst


def _gamma_flipped_sign(i, ref, k, sp, mg, m):
    g = gamma_coupling(i, ref, k, sp, mg, m)
    g[1, 1] = -g[1, 1]
    return g


def test_pair_relations_hold_on_oracle_amplitudes(rng):
    for n in (3, 4, 5):
        for _ in range(10):
            a = random_assembly(rng, n)
            sol = solve_amplitudes(a, (rng.standard_normal() + 1j, rng.standard_normal() - 0.5j))
            assert _pair_residual(a, sol, gamma_coupling) <= 1e-10


def test_gamma_flipped_sign_disagrees_with_oracle(rng):
    """A + sign on the (2,2) entry leaves an O(1) residual."""
    residuals = []
    for _ in range(10):
        a = random_assembly(rng, 3)
        sol = solve_amplitudes(a, (1.0, 0.3j))
        residuals.append(_pair_residual(a, sol, _gamma_flipped_sign))
    assert min(residuals) > 1e-6


@pytest.mark.parametrize("n", [2, 3, 6])
def test_identical_branches_give_identity_coupling(n, rng):
    j = symmetric_junction(n)
    m = random_flux_conserving(rng)
    a = ParallelAssembly(j, j, np.array([m] * n))
    for fast in (True, False):
        np.testing.assert_allclose(coupling_matrices(a, fast_path=fast).l, np.array([np.eye(2)] * n), atol=1e-12)


def test_ring_coupling_matrix():
    for k in np.linspace(0.2, 3.0, 15):
        l = coupling_matrices(ring(k)).l
        np.testing.assert_allclose(l[0], ring_l12(k, 1.0, 2.0), rtol=0, atol=1e-12)
        assert np.array_equal(l[1], np.eye(2))


def test_general_coupling_reproduces_interior_amplitudes(rng):
    for _ in range(20):
        a = random_assembly(rng, 3)
        l = coupling_matrices(a, fast_path=False).l
        sol = solve_amplitudes(a, (1.0, 0.4 - 0.2j))
        psi = np.array(sol.branch_states)
        for i in range(3):
            np.testing.assert_allclose(l[i] @ psi[a.reference_k], psi[i], rtol=0, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("fast", [True, False])
def test_equal_arms_closed_form(n, fast):
    j = symmetric_junction(n)
    for kl in np.linspace(0.05, 6.2, 40):
        if fast is False and abs(np.sin(kl)) < 1e-3:
            continue  # the general solve is singular at kL = n pi
        a = ParallelAssembly(j, j, np.array([free(1.0, kl)] * n))
        np.testing.assert_allclose(compose_parallel(a, fast_path=fast), equal_arms(j.alpha.real, kl), rtol=0, atol=1e-12)


def test_ring_closed_form():
    for k in np.linspace(0.1, 3.0, 30):
        m = compose_parallel(ring(k))
        m11, m12 = ring_m11_m12(k, 1.0, 2.0)
        assert abs(m[0, 0] - m11) <= 1e-12
        assert abs(m[0, 1] - m12) <= 1e-12


def test_random_n3_matches_oracle(rng):
    for _ in range(20):
        a = random_assembly(rng, 3)
        m, o = compose_parallel(a), oracle_transfer_matrix(a)
        assert np.abs(m - o).max() <= 1e-10 * max(1.0, np.abs(m).max()) ** 2


def test_single_branch_assembly_is_branch(rng):
    m = random_flux_conserving(rng)
    j = symmetric_junction(1)
    np.testing.assert_allclose(compose_parallel(ParallelAssembly(j, j, m[None])), m, atol=1e-14)


def test_fast_path_identity():
    np.testing.assert_allclose(identical_fast_path(symmetric_junction(4), np.eye(2), 4), np.eye(2), atol=1e-15)


def test_fast_path_transfer_factor():
    """Both reduction matrices equal (1/beta) [[1, alpha], [alpha, 1]] for the symmetric family."""
    from parallel_scatter.junctions import u_matrices

    for n in (2, 3, 7):
        j = symmetric_junction(n)
        expected = np.array([[1, j.alpha], [j.alpha, 1]]) / j.beta
        np.testing.assert_allclose(u_matrices(j, "splitter").sum(0), expected, atol=1e-14)
        np.testing.assert_allclose(u_matrices(j, "merger").sum(0), expected, atol=1e-14)


def test_fast_path_equal_arms():
    kl = 1.1
    np.testing.assert_allclose(identical_fast_path(symmetric_junction(2), free(1.0, kl), 2), equal_arms(-1 / 3, kl), atol=1e-14)


def test_fast_path_matches_general(rng):
    j = symmetric_junction(5)
    for _ in range(10):
        m = random_flux_conserving(rng)
        a = ParallelAssembly(j, j, np.array([m] * 5))
        np.testing.assert_allclose(identical_fast_path(j, m, 5), compose_parallel(a, fast_path=False), rtol=0, atol=1e-12)


def test_fast_path_inapplicable(rng):
    with pytest.raises(FastPathInapplicable):
        identical_fast_path(random_unitary_junction(3, rng), np.eye(2), 3)
    with pytest.raises(FastPathInapplicable):
        identical_fast_path(symmetric_junction(3), np.eye(2), 2)


def test_assembly_validation(rng):
    j2, j3 = symmetric_junction(2), symmetric_junction(3)
    with pytest.raises(InvalidAssembly):
        ParallelAssembly(j2, j3, np.array([np.eye(2)] * 2))
    with pytest.raises(InvalidAssembly):
        ParallelAssembly(j2, j2, np.array([np.eye(2), 2 * np.eye(2)]))
    with pytest.raises(InvalidAssembly):
        ParallelAssembly(j2, j2, np.array([np.eye(2)] * 2), reference_k=2)
    assert ParallelAssembly(j2, j2, np.array([np.eye(2)] * 2)).reference_k == 1


def test_ring_singular_at_resonant_arm():
    with pytest.raises(SingularityError):
        compose_parallel(ring(np.pi, l1=1.0, l2=2.0, ref=1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_reference_independence(seed, n):
    a = random_assembly(np.random.default_rng(seed), n)
    try:
        base = compose_parallel(a)
    except SingularityError:
        return
    scale = max(1.0, np.abs(base).max()) ** 2
    for k in range(n):
        assert np.abs(compose_parallel(a.with_reference(k)) - base).max() <= 1e-10 * scale


def eig_distance(a, b):
    ea, eb = np.linalg.eigvals(a), np.linalg.eigvals(b)
    return min(np.abs(ea - eb).max(), np.abs(ea - eb[::-1]).max())


@pytest.mark.parametrize("n", [2, 3, 4])
def test_similarity_spectrum(n, rng):
    j = symmetric_junction(n)
    for _ in range(10):
        m = random_flux_conserving(rng)
        big = compose_parallel(ParallelAssembly(j, j, np.array([m] * n)), fast_path=False)
        assert eig_distance(big, m) <= 1e-10


def test_flux_and_det_over_sweep():
    for k in np.linspace(0.05, 8.0, 300):
        if abs(np.sin(k)) < 1e-6:
            continue
        m = compose_parallel(ring(k))
        amp = transmission(m)
        assert abs(amp.big_t + amp.big_r - 1) <= 1e-9
        assert abs(det2(m) - 1) <= 1e-9


def test_perfect_transmission_positions():
    for n in (2, 3, 5):
        j = symmetric_junction(n)
        for p in range(1, 4):
            at = transmission(compose_parallel(ParallelAssembly(j, j, np.array([free(1.0, p * np.pi)] * n))))
            assert abs(abs(at.t) - 1) <= 1e-10
            mid = transmission(compose_parallel(ParallelAssembly(j, j, np.array([free(1.0, (p + 0.5) * np.pi)] * n))))
            assert abs(mid.t) < 1 - 1e-6


def test_reference_spread_with_ill_conditioned_merger_sum():
    """A draw where the K=0 merger-side sum has condition ~1e4; the composite must not inherit it."""
    rng = np.random.default_rng(0)
    a = [random_assembly(rng, 2) for _ in range(49)][-1]
    ms = [compose_parallel(a.with_reference(k)) for k in range(2)]
    assert np.abs(ms[0]).max() > 100
    assert np.abs(ms[0] - ms[1]).max() <= 1e-11
    assert np.abs(ms[0] - oracle_transfer_matrix(a)).max() <= 1e-10
