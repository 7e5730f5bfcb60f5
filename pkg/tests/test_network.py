import numpy as np
import pytest

from closed_forms import equal_arms
from parallel_scatter.elements import DeltaBarrier, DirectionalPhaseSegment, FreeSegment, element_transfer
from parallel_scatter.errors import InvalidAssembly, SingularityError
from parallel_scatter.junctions import JunctionSpec, symmetric_junction
from parallel_scatter.network import (
    Leaf,
    Parallel,
    Series,
    cayley_tree,
    chebyshev_u,
    count_leaves,
    evaluate,
    nested_fast_path,
    series_identical,
)
from parallel_scatter.composer import identical_fast_path


def test_series_of_free_segments():
    node = Series((Leaf(FreeSegment(0.7)), Leaf(FreeSegment(1.9))))
    np.testing.assert_allclose(evaluate(node, 1.3), element_transfer(FreeSegment(2.6), 1.3), atol=1e-14)


def test_single_child_series_is_child():
    leaf = Leaf(DeltaBarrier(1.2))
    np.testing.assert_array_equal(evaluate(Series((leaf,)), 0.9), evaluate(leaf, 0.9))


def test_series_order_first_child_nearest_input():
    """Barrier then phase differs from phase then barrier; the product order is left-to-right."""
    k = 1.1
    barrier, phase = Leaf(DeltaBarrier(2.0)), Leaf(DirectionalPhaseSegment(0.3, 0.9))
    mb, mp = evaluate(barrier, k), evaluate(phase, k)
    np.testing.assert_allclose(evaluate(Series((barrier, phase)), k), mb @ mp)
    np.testing.assert_allclose(evaluate(Series((phase, barrier)), k), mp @ mb)
    assert np.abs(mb @ mp - mp @ mb).max() > 0.1


def test_equal_arm_parallel():
    node = Parallel((Leaf(FreeSegment(1.0)), Leaf(FreeSegment(1.0))))
    for k in (0.4, 1.7, np.pi, 4.0):
        np.testing.assert_allclose(evaluate(node, k), equal_arms(-1 / 3, k), atol=1e-13)


def test_depth_two_binary_bundle_recurrence():
    j = symmetric_junction(2)
    tree = cayley_tree(2, 2, FreeSegment(0.8), j)
    for k in (0.3, 1.4, 2.2):
        inner = identical_fast_path(j, element_transfer(FreeSegment(0.8), k), 2)
        outer = identical_fast_path(j, inner, 2)
        np.testing.assert_allclose(evaluate(tree, k, fast_path=False), outer, atol=1e-10)


def test_cayley_structure():
    assert isinstance(cayley_tree(1, 2, FreeSegment(1.0)), Parallel)
    two = cayley_tree(2, 2, FreeSegment(1.0))
    assert all(isinstance(c, Parallel) for c in two.children)
    assert count_leaves(two) == 4
    assert count_leaves(cayley_tree(3, 3, FreeSegment(1.0))) == 27


def test_cayley_depth3_ternary_matches_fast_path():
    j = symmetric_junction(3)
    tree = cayley_tree(3, 3, FreeSegment(0.6), j)
    for k in (0.5, 1.3, 2.9):
        expected = nested_fast_path(element_transfer(FreeSegment(0.6), k), j, 3)
        np.testing.assert_allclose(evaluate(tree, k, fast_path=False), expected, atol=1e-10)


def test_recurrence_property_on_subtree(rng):
    sub = Series((Leaf(DeltaBarrier(1.5)), Leaf(FreeSegment(0.4)), Leaf(DeltaBarrier(0.5))))
    for n in (2, 3, 4):
        j = symmetric_junction(n)
        node = Parallel((sub,) * n, j, j)
        for k in (0.7, 1.9):
            expected = identical_fast_path(j, evaluate(sub, k), n)
            np.testing.assert_allclose(evaluate(node, k, fast_path=False), expected, atol=1e-10)


def test_resonance_positions_independent_of_n():
    for n in (2, 3, 4, 6):
        node = Parallel((Leaf(FreeSegment(1.0)),) * n)
        for p in (1, 2, 3):
            m = evaluate(node, p * np.pi)
            assert abs(abs(m[0, 0]) - 1) <= 1e-10


def test_error_path_tagging():
    j = symmetric_junction(2)
    ring = Parallel((Leaf(FreeSegment(1.0)), Leaf(FreeSegment(2.0))), j, j)
    node = Series((Leaf(FreeSegment(0.1)), Parallel((ring, Leaf(FreeSegment(0.5))), j, j)))
    with pytest.raises(SingularityError) as info:
        evaluate(node, np.pi, fast_path=False)
    assert info.value.path[:2] == ("series[1]", "parallel[0]")
    assert str(info.value).startswith("series[1]/parallel[0]")


def test_node_validation():
    with pytest.raises(InvalidAssembly):
        Series(())
    with pytest.raises(InvalidAssembly):
        Parallel((Leaf(FreeSegment(1.0)),))
    with pytest.raises(InvalidAssembly):
        Parallel((Leaf(FreeSegment(1.0)),) * 2, symmetric_junction(3))
    with pytest.raises(InvalidAssembly):
        Parallel((Leaf(FreeSegment(1.0)),) * 2, reference_k=5)


def test_chebyshev_u_values():
    x = 0.3
    assert chebyshev_u(-1, x) == 0
    assert chebyshev_u(0, x) == 1
    assert chebyshev_u(1, x) == pytest.approx(2 * x)
    assert chebyshev_u(3, x) == pytest.approx(8 * x**3 - 4 * x)
    theta = 0.7
    assert chebyshev_u(5, np.cos(theta)) == pytest.approx(np.sin(6 * theta) / np.sin(theta))


def test_series_identical_small_powers(rng):
    from parallel_scatter.elements import random_flux_conserving

    m = random_flux_conserving(rng)
    np.testing.assert_array_equal(series_identical(m, 1), m)
    np.testing.assert_allclose(series_identical(m, 2), m @ m, atol=1e-12)


def test_series_identical_free_segment():
    k, length = 1.37, 0.8
    np.testing.assert_allclose(
        series_identical(element_transfer(FreeSegment(length), k), 5),
        element_transfer(FreeSegment(5 * length), k),
        atol=1e-12,
    )


@pytest.mark.parametrize("n", [3, 7, 16, 33, 64])
def test_series_identical_matches_repeated_product(n, rng):
    for _ in range(5):
        cell = Series((Leaf(DeltaBarrier(rng.uniform(-1, 1))), Leaf(FreeSegment(rng.uniform(0.1, 2)))))
        m = evaluate(cell, rng.uniform(0.5, 3))
        direct = np.linalg.matrix_power(m, n)
        scale = max(1.0, np.abs(direct).max())
        assert np.abs(series_identical(m, n) - direct).max() <= 1e-10 * scale


def test_series_identical_rejects_non_unit_det():
    with pytest.raises(ValueError):
        series_identical(2 * np.eye(2), 3)
