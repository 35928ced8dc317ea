"""Quantum inverse scattering toolkit for integrable hard-core anyon chains.

Anyonic gradings and graded tensor products, Yang-Baxter/RLL verifiers, anyonic
XXX and su(3) t-J chains (transfer matrices, Hamiltonians, exact spectra), and
Bethe-ansatz equations with a root solver matched against exact diagonalization.
"""

from .bethe import (
    BetheRootsTJ,
    BetheRootsXXX,
    MatchReport,
    QuantumNumberSet,
    continue_roots,
    match_spectrum,
    solve_bae,
    tj_bae_residual,
    tj_energy,
    tj_lambda,
    xxx_bae_residual,
    xxx_energy,
    xxx_lambda,
)
from .chain import (
    ModelSpec,
    Spectrum,
    build_hamiltonian,
    build_monodromy,
    build_site_operators,
    build_tj_hamiltonian,
    build_xxx_hamiltonian,
    commutation_of_transfers,
    commutation_suite,
    exact_spectrum,
    hamiltonian_from_transfer,
    transfer_matrix,
    transfer_polynomial_coeffs,
)
from .graded import (
    ChainLayout,
    ChainOperator,
    GradingTable,
    anyonic_permutation,
    embed_local,
    graded_partial_trace,
    graded_tensor,
    make_grading_table,
    string_transparency_check,
)
from .integrability import check_rll, check_ybe, tj_lax, tj_nested_lax, tj_r_matrix, xxx_lax, xxx_r_matrix

__version__ = "0.1.0"
