"""Transfer matrices of scatterers connected in series and in parallel."""

__version__ = "0.1.0"

from .composer import (
    CouplingSet,
    ParallelAssembly,
    compose_parallel,
    coupling_matrices,
    gamma_coupling,
    identical_fast_path,
    q_matrix,
)
from .elements import (
    Custom,
    DeltaBarrier,
    DirectionalPhaseSegment,
    FreeSegment,
    element_transfer,
)
from .errors import (
    DegenerateLead,
    FastPathInapplicable,
    InvalidAssembly,
    InvalidElement,
    InvalidJunction,
    OpaqueAtThisK,
    ScatterError,
    SingularityError,
    SingularMatrix,
    SingularSystem,
)
from .junctions import (
    JunctionDiagnostics,
    JunctionSpec,
    gamma_sums,
    symmetric_junction,
    u_matrices,
    validate_junction,
)
from .network import Leaf, Parallel, Series, cayley_tree, evaluate, series_identical
from .numerics import Tolerances, block_solve, mat2_inv, mat2_mul
from .oracle import AmplitudeSolution, oracle_transfer_matrix, solve_amplitudes
from .transport import Resonance, ScatterAmplitudes, SpectrumPoint, find_resonances, spectrum, transmission
