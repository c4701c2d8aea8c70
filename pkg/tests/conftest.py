import numpy as np
import pytest
from hypothesis import settings

from spinad.fock import Spin, SpinOrbital
from spinad.operators import GeneratorId, GeneratorKind, make_id

settings.register_profile("spinad", deadline=None, derandomize=True)
settings.load_profile("spinad")

THETAS = (0.1, -0.1, 0.37, -0.37, 1.0, -1.0, np.pi, -np.pi, 10.0, -10.0)


def representative_ids(n_orb: int = 4) -> dict[str, GeneratorId]:
    """One generator per kind, occupied labels low and virtual labels high.

    Kinds needing more distinct orbitals than ``n_orb`` are left out.
    """
    top = n_orb - 1
    ids = {
        "sa_single": make_id(GeneratorKind.SA_SINGLE, top, 0),
        "aiai": make_id(GeneratorKind.SA_DOUBLE_AIAI, top, 0),
        "fermionic_single": GeneratorId(
            GeneratorKind.FERMIONIC_SINGLE, (SpinOrbital(top, Spin.BETA), SpinOrbital(0, Spin.BETA))
        ),
    }
    if n_orb >= 3:
        ids["aiaj"] = make_id(GeneratorKind.SA_DOUBLE_AIAJ, top, 0, 1)
        ids["aibi"] = make_id(GeneratorKind.SA_DOUBLE_AIBI, top - 1, top, 0)
    if n_orb >= 4:
        ids["aibj"] = make_id(GeneratorKind.SA_DOUBLE_AIBJ, top - 1, top, 0, 1)
        ids["prime"] = make_id(GeneratorKind.SA_DOUBLE_PRIME_AIBJ, top - 1, top, 0, 1)
        ids["fermionic_double"] = GeneratorId(
            GeneratorKind.FERMIONIC_DOUBLE,
            (SpinOrbital(top, Spin.ALPHA), SpinOrbital(top - 1, Spin.BETA), SpinOrbital(0, Spin.ALPHA), SpinOrbital(1, Spin.BETA)),
        )
    return ids


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
