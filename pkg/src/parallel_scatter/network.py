"""Composition trees of elements: series chains and parallel bundles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .composer import ParallelAssembly, compose_parallel, identical_fast_path
from .elements import ElementSpec, element_transfer
from .errors import InvalidAssembly, SingularityError
from .junctions import JunctionSpec, symmetric_junction
from .numerics import DEFAULT_TOL, IDENTITY, Tolerances, TransferMatrix2, det2


@dataclass(frozen=True)
class Leaf:
    element: ElementSpec


@dataclass(frozen=True)
class Series:
    """Chain of nodes; the first child sits next to the input (left) lead."""

    children: tuple["NetworkNode", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise InvalidAssembly("series needs at least one child")


@dataclass(frozen=True)
class Parallel:
    """Bundle of branches between two junctions; symmetric junctions by default.

    ``reference_k`` is a 0-based branch index (``None`` -> last branch).
    """

    children: tuple["NetworkNode", ...]
    splitter: JunctionSpec | None = None
    merger: JunctionSpec | None = None
    reference_k: int | None = None

    def __post_init__(self):
        children = tuple(self.children)
        object.__setattr__(self, "children", children)
        n = len(children)
        if n < 2:
            raise InvalidAssembly(f"parallel needs at least two children, got {n}")
        if self.splitter is None:
            object.__setattr__(self, "splitter", symmetric_junction(n))
        if self.merger is None:
            object.__setattr__(self, "merger", symmetric_junction(n))
        for name in ("splitter", "merger"):
            got = getattr(self, name).n_branches
            if got != n:
                raise InvalidAssembly(f"{name} has {got} branches but the bundle has {n} children")
        if self.reference_k is not None and not 0 <= self.reference_k < n:
            raise InvalidAssembly(f"reference branch {self.reference_k} outside [0, {n - 1}]")


NetworkNode = Union[Leaf, Series, Parallel]
ParallelRule = Callable[[ParallelAssembly], TransferMatrix2]


def evaluate(
    node: NetworkNode,
    k: float,
    *,
    fast_path: bool = True,
    tol: Tolerances = DEFAULT_TOL,
    parallel_rule: ParallelRule | None = None,
) -> TransferMatrix2:
    """Transfer matrix of ``node`` at wavenumber ``k``.

    ``parallel_rule`` replaces the composer for parallel bundles (the oracle
    check uses this). Singular failures are re-raised with the tree path of
    the failing node, e.g. ``parallel[1]/series[0]``.
    """
    rule = parallel_rule or (lambda a: compose_parallel(a, fast_path=fast_path))
    return _evaluate(node, k, rule, tol)


def _evaluate(node: NetworkNode, k: float, rule: ParallelRule, tol: Tolerances) -> TransferMatrix2:
    if isinstance(node, Leaf):
        return element_transfer(node.element, k)
    if isinstance(node, Series):
        out = IDENTITY.copy()
        for idx, child in enumerate(node.children):
            out = out @ _child(child, idx, "series", k, rule, tol)
        return out
    if isinstance(node, Parallel):
        branches = np.array(
            [_child(child, idx, "parallel", k, rule, tol) for idx, child in enumerate(node.children)]
        )
        assembly = ParallelAssembly(node.splitter, node.merger, branches, node.reference_k, tol)
        return rule(assembly)
    raise TypeError(f"not a network node: {node!r}")


def _child(child, idx, kind, k, rule, tol):
    try:
        return _evaluate(child, k, rule, tol)
    except SingularityError as exc:
        raise exc.with_prefix(f"{kind}[{idx}]") from None


def cayley_tree(depth: int, branching: int, leaf: ElementSpec, junction: JunctionSpec | None = None) -> NetworkNode:
    """Nested parallel bundles, ``depth`` levels deep, with ``branching ** depth`` leaves."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if branching < 2:
        raise ValueError(f"branching must be >= 2, got {branching}")
    junction = symmetric_junction(branching) if junction is None else junction
    if junction.n_branches != branching:
        raise InvalidAssembly(f"junction has {junction.n_branches} branches, expected {branching}")
    node: NetworkNode = Leaf(leaf)
    for _ in range(depth):
        node = Parallel((node,) * branching, junction, junction)
    return node


def count_leaves(node: NetworkNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return sum(count_leaves(c) for c in node.children)


def nested_fast_path(m: TransferMatrix2, junction: JunctionSpec, depth: int) -> TransferMatrix2:
    for _ in range(depth):
        m = identical_fast_path(junction, m, junction.n_branches)
    return m


def chebyshev_u(n: int, x: complex) -> complex:
    """Chebyshev polynomial of the second kind, with U_{-1} = 0."""
    if n < -1:
        raise ValueError("n must be >= -1")
    prev, cur = 0.0, 1.0
    if n == -1:
        return prev
    for _ in range(n):
        prev, cur = cur, 2 * x * cur - prev
    return cur


def series_identical(m: TransferMatrix2, n: int, tol: Tolerances = DEFAULT_TOL) -> TransferMatrix2:
    """``m ** n`` for a unit-determinant matrix via ``U_{n-1}(x) m - U_{n-2}(x) I``, ``x = tr(m)/2``."""
    m = np.asarray(m, dtype=complex)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if abs(det2(m) - 1) > tol.det:
        raise ValueError(f"|det - 1| = {abs(det2(m) - 1):.3e} exceeds {tol.det}")
    if n == 1:
        return m.copy()
    x = (m[0, 0] + m[1, 1]) / 2
    return chebyshev_u(n - 1, x) * m - chebyshev_u(n - 2, x) * IDENTITY
