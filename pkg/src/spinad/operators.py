"""Excitation generators and spin operators on a determinant sector.

Every generator is stored as the real skew-symmetric matrix of G = T - T^T.
Spin-adapted doubles use the singlet-coupled operator

    T_aibj = (E_ai E_bj + E_aj E_bi) / (2 sqrt((1 + d_ab)(1 + d_ij)))

and its triplet-intermediate partner

    T'_aibj = (E_ai E_bj - E_aj E_bi) / (2 sqrt(3)),

where E_pq is the spin-summed singlet excitation operator.
"""

from __future__ import annotations

import enum
import functools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt

import numpy as np

from spinad.families import ClosedFormFamily
from spinad.fock import (
    Kind,
    SectorBasis,
    SparseOperator,
    Spin,
    SpinOrbital,
    build_sector_basis,
    compose_number_conserving,
    elementary,
)


class GeneratorKind(str, enum.Enum):
    FERMIONIC_SINGLE = "fermionic_single"
    FERMIONIC_DOUBLE = "fermionic_double"
    SA_SINGLE = "sa_single"
    SA_DOUBLE_AIAI = "sa_double_aiai"
    SA_DOUBLE_AIAJ = "sa_double_aiaj"
    SA_DOUBLE_AIBI = "sa_double_aibi"
    SA_DOUBLE_AIBJ = "sa_double_aibj"
    SA_DOUBLE_PRIME_AIBJ = "sa_double_prime_aibj"

    @property
    def spin_adapted(self) -> bool:
        return self.value.startswith("sa_")


_FAMILY = {
    GeneratorKind.FERMIONIC_SINGLE: ClosedFormFamily.CUBIC,
    GeneratorKind.FERMIONIC_DOUBLE: ClosedFormFamily.CUBIC,
    GeneratorKind.SA_SINGLE: ClosedFormFamily.SA_SINGLE_PAIR,
    GeneratorKind.SA_DOUBLE_AIAI: ClosedFormFamily.CUBIC,
    GeneratorKind.SA_DOUBLE_AIAJ: ClosedFormFamily.QUINTIC,
    GeneratorKind.SA_DOUBLE_AIBI: ClosedFormFamily.QUINTIC,
    GeneratorKind.SA_DOUBLE_AIBJ: ClosedFormFamily.NINTH,
    GeneratorKind.SA_DOUBLE_PRIME_AIBJ: ClosedFormFamily.ELEVENTH,
}


@dataclass(frozen=True)
class GeneratorId:
    """Canonical label of an excitation generator.

    ``indices`` layout per kind (spatial indices unless noted):

    * ``fermionic_single``: ``(a, i)`` as :class:`SpinOrbital`
    * ``fermionic_double``: ``(a, b, i, j)`` as :class:`SpinOrbital`, T = a+_a a+_b a_j a_i
    * ``sa_single``, ``sa_double_aiai``: ``(a, i)``
    * ``sa_double_aiaj``: ``(a, i, j)`` with ``i < j``
    * ``sa_double_aibi``: ``(a, b, i)`` with ``a < b``
    * ``sa_double_aibj``, ``sa_double_prime_aibj``: ``(a, b, i, j)`` with ``a < b``, ``i < j``

    ``sign`` is the factor picked up when the triplet-coupled operator is
    relabelled into canonical order; it is +1 for every other kind.
    Use :func:`make_id` to build one from arbitrary labels.
    """

    kind: GeneratorKind
    indices: tuple
    sign: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        object.__setattr__(self, "indices", tuple(self.indices))
        _validate(self)

    @property
    def family(self) -> ClosedFormFamily:
        return _FAMILY[self.kind]

    def spatial_orbitals(self) -> set[int]:
        if self.kind in (GeneratorKind.FERMIONIC_SINGLE, GeneratorKind.FERMIONIC_DOUBLE):
            return {o.spatial for o in self.indices}
        return set(self.indices)

    def __str__(self) -> str:
        sign = "-" if self.sign < 0 else ""
        return f"{sign}{self.kind.value}{self.indices}"


def _validate(gid: GeneratorId) -> None:
    kind, idx = gid.kind, gid.indices
    if gid.sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {gid.sign}")
    if gid.sign == -1 and kind is not GeneratorKind.SA_DOUBLE_PRIME_AIBJ:
        raise ValueError(f"{kind.value} has no sign-carrying relabelling")
    arity = {
        GeneratorKind.FERMIONIC_SINGLE: 2,
        GeneratorKind.FERMIONIC_DOUBLE: 4,
        GeneratorKind.SA_SINGLE: 2,
        GeneratorKind.SA_DOUBLE_AIAI: 2,
        GeneratorKind.SA_DOUBLE_AIAJ: 3,
        GeneratorKind.SA_DOUBLE_AIBI: 3,
        GeneratorKind.SA_DOUBLE_AIBJ: 4,
        GeneratorKind.SA_DOUBLE_PRIME_AIBJ: 4,
    }[kind]
    if len(idx) != arity:
        raise ValueError(f"{kind.value} takes {arity} indices, got {idx}")

    if kind is GeneratorKind.FERMIONIC_SINGLE:
        a, i = idx
        if not all(isinstance(o, SpinOrbital) for o in idx):
            raise ValueError("fermionic indices must be SpinOrbital")
        if a.spin != i.spin:
            raise ValueError(f"single {a!r}<-{i!r} does not conserve spin")
        if a == i:
            raise ValueError("single excitation with a == i")
        return
    if kind is GeneratorKind.FERMIONIC_DOUBLE:
        a, b, i, j = idx
        if not all(isinstance(o, SpinOrbital) for o in idx):
            raise ValueError("fermionic indices must be SpinOrbital")
        if sorted((a.spin, b.spin)) != sorted((i.spin, j.spin)):
            raise ValueError(f"double {a!r}{b!r}<-{i!r}{j!r} does not conserve spin")
        if a == b or i == j or {a, b} & {i, j}:
            raise ValueError(f"double {a!r}{b!r}<-{i!r}{j!r} needs four distinct spin orbitals")
        return

    if any(not isinstance(p, int) or p < 0 for p in idx):
        raise ValueError(f"spatial indices must be non-negative integers, got {idx}")
    if kind in (GeneratorKind.SA_SINGLE, GeneratorKind.SA_DOUBLE_AIAI):
        a, i = idx
        if a == i:
            raise ValueError(f"{kind.value} requires a != i")
    elif kind is GeneratorKind.SA_DOUBLE_AIAJ:
        a, i, j = idx
        if not i < j:
            raise ValueError(f"sa_double_aiaj requires i < j, got {idx}")
        if a in (i, j):
            raise ValueError(f"sa_double_aiaj requires a not in (i, j), got {idx}")
    elif kind is GeneratorKind.SA_DOUBLE_AIBI:
        a, b, i = idx
        if not a < b:
            raise ValueError(f"sa_double_aibi requires a < b, got {idx}")
        if i in (a, b):
            raise ValueError(f"sa_double_aibi requires i not in (a, b), got {idx}")
    else:
        a, b, i, j = idx
        if not (a < b and i < j):
            raise ValueError(f"{kind.value} requires a < b and i < j, got {idx}")
        if {a, b} & {i, j}:
            raise ValueError(f"{kind.value} requires disjoint (a, b) and (i, j), got {idx}")


def make_id(kind: GeneratorKind | str, *indices) -> GeneratorId:
    """Build a canonical :class:`GeneratorId` from labels in any order.

    Symmetric relabellings are sorted away. For the triplet-coupled double,
    each of a<->b and i<->j flips the operator's sign, recorded in ``sign``.

    Raises:
        ValueError: when indices coincide where the operator requires them distinct.
    """
    kind = GeneratorKind(kind)
    if kind is GeneratorKind.SA_DOUBLE_AIAJ:
        a, i, j = indices
        if i == j:
            raise ValueError("sa_double_aiaj requires i != j")
        return GeneratorId(kind, (a, min(i, j), max(i, j)))
    if kind is GeneratorKind.SA_DOUBLE_AIBI:
        a, b, i = indices
        if a == b:
            raise ValueError("sa_double_aibi requires a != b")
        return GeneratorId(kind, (min(a, b), max(a, b), i))
    if kind in (GeneratorKind.SA_DOUBLE_AIBJ, GeneratorKind.SA_DOUBLE_PRIME_AIBJ):
        a, b, i, j = indices
        if a == b or i == j:
            raise ValueError(f"{kind.value} requires a != b and i != j")
        sign = 1
        if a > b:
            a, b, sign = b, a, -sign
        if i > j:
            i, j, sign = j, i, -sign
        if kind is GeneratorKind.SA_DOUBLE_AIBJ:
            sign = 1
        return GeneratorId(kind, (a, b, i, j), sign)
    return GeneratorId(kind, tuple(indices))


def sa_double_id(a: int, i: int, b: int, j: int, *, prime: bool = False) -> GeneratorId:
    """Pick the spin-adapted double case for T_{ai,bj} from its index coincidences."""
    if prime:
        return make_id(GeneratorKind.SA_DOUBLE_PRIME_AIBJ, a, b, i, j)
    if a == b and i == j:
        return make_id(GeneratorKind.SA_DOUBLE_AIAI, a, i)
    if a == b:
        return make_id(GeneratorKind.SA_DOUBLE_AIAJ, a, i, j)
    if i == j:
        return make_id(GeneratorKind.SA_DOUBLE_AIBI, a, b, i)
    return make_id(GeneratorKind.SA_DOUBLE_AIBJ, a, b, i, j)


@dataclass(frozen=True, eq=False)
class Generator:
    """Skew-symmetric generator matrix on one sector, with cached powers.

    Every generator is ``sqrt(scale_sq) * N`` for a rational ``scale_sq`` and
    a matrix ``N`` with integer entries. Powers of ``N`` are exact in floating
    point; the closed-form exponential uses that to avoid amplifying the
    rounding of the irrational prefactor.
    """

    id: GeneratorId
    basis: SectorBasis
    integer_matrix: SparseOperator
    scale_sq: Fraction = Fraction(1)
    parts: tuple[Generator, ...] = ()
    matrix: SparseOperator = field(init=False)
    _powers: list = field(default_factory=list, init=False, repr=False)
    _integer_powers: list = field(default_factory=list, init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale_sq", Fraction(self.scale_sq))
        data = self.integer_matrix.csr.data
        if data.size and not np.array_equal(data, np.round(data)):
            raise ValueError("integer_matrix must have integer entries")
        object.__setattr__(self, "matrix", self.scale * self.integer_matrix)

    @property
    def scale(self) -> float:
        return sqrt(self.scale_sq.numerator / self.scale_sq.denominator)

    @property
    def family(self) -> ClosedFormFamily:
        return self.id.family

    @property
    def dim(self) -> int:
        return self.basis.size

    def _grow(self, store: list, base: SparseOperator, p: int) -> SparseOperator:
        if p < 0:
            raise ValueError("negative power")
        if p < len(store):
            return store[p]
        with self._lock:
            if not store:
                store.append(SparseOperator.identity(self.dim))
            while len(store) <= p:
                store.append(store[-1] @ base)
            return store[p]

    def power(self, p: int) -> SparseOperator:
        """``G^p`` for ``p >= 0``; computed once and shared between threads."""
        return self._grow(self._powers, self.matrix, p)

    def integer_power(self, p: int) -> SparseOperator:
        """``N^p`` (exact integers), so that ``G^p = scale^p N^p``."""
        return self._grow(self._integer_powers, self.integer_matrix, p)

    def cached(self, key, factory):
        """Memoise ``factory()`` on this generator under ``key`` (thread-safe)."""
        try:
            return self._cache[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._cache:
                self._cache[key] = factory()
            return self._cache[key]


def _check_in_basis(orbitals: set[int], basis: SectorBasis) -> None:
    bad = [p for p in orbitals if p >= basis.n_orb]
    if bad:
        raise ValueError(f"orbital(s) {bad} outside {basis.n_orb} spatial orbitals")


def build_E(a: int, i: int, basis: SectorBasis) -> SparseOperator:
    """Singlet excitation operator E_ai = a+_{a,alpha} a_{i,alpha} + a+_{a,beta} a_{i,beta}."""
    _check_in_basis({a, i}, basis)
    return sum(
        (
            compose_number_conserving(
                [(Kind.CREATE, SpinOrbital(a, s)), (Kind.ANNIHILATE, SpinOrbital(i, s))], basis
            )
            for s in (Spin.ALPHA, Spin.BETA)
        ),
        SparseOperator.zeros(basis.size),
    )


def _skew(t: SparseOperator) -> SparseOperator:
    return t - t.T


def build_fermionic_G(excitation: tuple[SpinOrbital, ...], basis: SectorBasis) -> Generator:
    """Generic fermionic generator G = T - T^T for a single ``(a, i)`` or double ``(a, b, i, j)``.

    Raises:
        ValueError: when the excitation does not conserve spin or repeats an orbital.
    """
    if len(excitation) == 2:
        gid = GeneratorId(GeneratorKind.FERMIONIC_SINGLE, excitation)
        a, i = excitation
        string = [(Kind.CREATE, a), (Kind.ANNIHILATE, i)]
    elif len(excitation) == 4:
        gid = GeneratorId(GeneratorKind.FERMIONIC_DOUBLE, excitation)
        a, b, i, j = excitation
        string = [(Kind.CREATE, a), (Kind.CREATE, b), (Kind.ANNIHILATE, j), (Kind.ANNIHILATE, i)]
    else:
        raise ValueError(f"expected 2 or 4 spin orbitals, got {len(excitation)}")
    _check_in_basis(gid.spatial_orbitals(), basis)
    return Generator(gid, basis, _skew(compose_number_conserving(string, basis)))


def _sa_T(gid: GeneratorId, basis: SectorBasis) -> tuple[SparseOperator, Fraction]:
    """Integer part of T and the square of its prefactor."""
    kind = gid.kind
    E = functools.partial(build_E, basis=basis)
    if kind is GeneratorKind.SA_DOUBLE_AIAI:
        a, i = gid.indices
        e = E(a, i)
        return e @ e, Fraction(1, 4)
    if kind is GeneratorKind.SA_DOUBLE_AIAJ:
        a, i, j = gid.indices
        return E(a, i) @ E(a, j) + E(a, j) @ E(a, i), Fraction(1, 8)
    if kind is GeneratorKind.SA_DOUBLE_AIBI:
        a, b, i = gid.indices
        return E(a, i) @ E(b, i), Fraction(1, 2)
    a, b, i, j = gid.indices
    if kind is GeneratorKind.SA_DOUBLE_AIBJ:
        return E(a, i) @ E(b, j) + E(a, j) @ E(b, i), Fraction(1, 4)
    return gid.sign * (E(a, i) @ E(b, j) - E(a, j) @ E(b, i)), Fraction(1, 12)


def build_sa_generator(gid: GeneratorId, basis: SectorBasis) -> Generator:
    """Spin-adapted singlet generator for ``gid`` on ``basis``.

    The single is (G_{a,alpha;i,alpha} + G_{a,beta;i,beta}) / sqrt(2); its two
    commuting fermionic halves are kept in ``parts`` for the product-form
    exponential.
    """
    if not gid.kind.spin_adapted:
        raise ValueError(f"{gid.kind.value} is not spin-adapted")
    _check_in_basis(gid.spatial_orbitals(), basis)
    if gid.kind is GeneratorKind.SA_SINGLE:
        a, i = gid.indices
        parts = tuple(
            build_fermionic_G((SpinOrbital(a, s), SpinOrbital(i, s)), basis) for s in (Spin.ALPHA, Spin.BETA)
        )
        integer = parts[0].integer_matrix + parts[1].integer_matrix
        return Generator(gid, basis, integer, Fraction(1, 2), parts)
    t, scale_sq = _sa_T(gid, basis)
    return Generator(gid, basis, _skew(t), scale_sq)


@functools.lru_cache(maxsize=4096)
def build_generator(gid: GeneratorId, basis: SectorBasis) -> Generator:
    """Dispatch on ``gid.kind``; results are cached per ``(gid, basis)``."""
    if gid.kind.spin_adapted:
        return build_sa_generator(gid, basis)
    return build_fermionic_G(gid.indices, basis)


@dataclass(frozen=True)
class SpinOperators:
    """S_z, S_+, S_- and S^2 on one sector.

    ``S_plus`` maps the sector to ``(n_alpha + 1, n_beta - 1)`` and ``S_minus``
    maps back; both have zero rows/columns when that sector does not exist.
    """

    S_z: SparseOperator
    S_plus: SparseOperator
    S_minus: SparseOperator
    S_squared: SparseOperator

    def __iter__(self):
        return iter((self.S_z, self.S_plus, self.S_minus, self.S_squared))


@functools.lru_cache(maxsize=256)
def build_spin_operators(basis: SectorBasis) -> SpinOperators:
    """Total-spin operators assembled from ladder-operator matrices."""
    n, dim = basis.n_orb, basis.size
    sz = SparseOperator.zeros(dim)
    for p in range(n):
        n_a = compose_number_conserving([(Kind.CREATE, SpinOrbital(p, Spin.ALPHA)), (Kind.ANNIHILATE, SpinOrbital(p, Spin.ALPHA))], basis)
        n_b = compose_number_conserving([(Kind.CREATE, SpinOrbital(p, Spin.BETA)), (Kind.ANNIHILATE, SpinOrbital(p, Spin.BETA))], basis)
        sz = sz + 0.5 * (n_a - n_b)

    if basis.n_beta > 0 and basis.n_alpha < n:
        mid = build_sector_basis(n, basis.n_alpha, basis.n_beta - 1)
        raised = build_sector_basis(n, basis.n_alpha + 1, basis.n_beta - 1)
        s_plus = SparseOperator.zeros(raised.size, dim)
        for p in range(n):
            lower = elementary(Kind.ANNIHILATE, SpinOrbital(p, Spin.BETA), basis, mid)
            upper = elementary(Kind.CREATE, SpinOrbital(p, Spin.ALPHA), mid, raised)
            s_plus = s_plus + upper @ lower
    else:
        s_plus = SparseOperator.zeros(0, dim)
    s_minus = s_plus.T
    s2 = s_minus @ s_plus + sz @ (sz + SparseOperator.identity(dim))
    return SpinOperators(sz, s_plus, s_minus, s2)
