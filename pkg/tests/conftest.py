import numpy as np
import pytest

from parallel_scatter.composer import ParallelAssembly
from parallel_scatter.elements import random_flux_conserving
from parallel_scatter.junctions import random_unitary_junction


def random_assembly(rng: np.random.Generator, n: int, reference_k=None) -> ParallelAssembly:
    return ParallelAssembly(
        random_unitary_junction(n, rng),
        random_unitary_junction(n, rng),
        np.array([random_flux_conserving(rng) for _ in range(n)]),
        reference_k,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
