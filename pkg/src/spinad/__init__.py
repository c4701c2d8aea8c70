"""Exact closed-form exponentials of spin-adapted fermionic excitation generators."""

from spinad.ansatz import (
    PoolMode,
    PoolSpec,
    ProductAnsatz,
    SpinFreeHamiltonian,
    count_parameters,
    energy_and_gradient,
    enumerate_pool,
    state,
)
from spinad.closedform import (
    ClosedFormCoefficients,
    PolynomialRelation,
    apply_exponential,
    derive_closed_form,
    find_minimal_polynomial,
    golden_coefficients,
    verify_relation,
)
from spinad.families import ClosedFormFamily
from spinad.fock import SectorBasis, SparseOperator, SpinOrbital, build_sector_basis
from spinad.operators import Generator, GeneratorId, GeneratorKind, build_generator, make_id

__version__ = "0.1.0"
