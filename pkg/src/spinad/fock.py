"""Determinant bases, fermionic ladder operators and a small sparse-matrix type.

Spin orbitals are interleaved: spatial orbital ``p`` owns bit ``2p`` (alpha)
and bit ``2p + 1`` (beta) of a determinant bitmask. Signs follow the
Jordan-Wigner convention in that ordering.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

#: A determinant is the integer bitmask of its occupied spin orbitals.
Determinant = int


class Spin(enum.IntEnum):
    ALPHA = 0
    BETA = 1


class Kind(str, enum.Enum):
    CREATE = "create"
    ANNIHILATE = "annihilate"


@dataclass(frozen=True, order=True)
class SpinOrbital:
    """A spatial orbital index paired with a spin label."""

    spatial: int
    spin: Spin

    def __post_init__(self) -> None:
        if self.spatial < 0:
            raise ValueError(f"negative spatial orbital index {self.spatial}")
        object.__setattr__(self, "spin", Spin(self.spin))

    @property
    def index(self) -> int:
        """Linearized (interleaved) spin-orbital index."""
        return 2 * self.spatial + int(self.spin)

    @classmethod
    def from_index(cls, index: int) -> SpinOrbital:
        return cls(index // 2, Spin(index % 2))

    def __repr__(self) -> str:
        return f"{self.spatial}{'ab'[self.spin]}"


def alpha(p: int) -> SpinOrbital:
    return SpinOrbital(p, Spin.ALPHA)


def beta(p: int) -> SpinOrbital:
    return SpinOrbital(p, Spin.BETA)


def make_determinant(alpha_occ: Iterable[int], beta_occ: Iterable[int]) -> Determinant:
    """Bitmask of the determinant with the given occupied spatial orbitals per spin."""
    det = 0
    for p in alpha_occ:
        det |= 1 << (2 * p)
    for p in beta_occ:
        det |= 1 << (2 * p + 1)
    return det


def spin_counts(det: Determinant) -> tuple[int, int]:
    """Return ``(n_alpha, n_beta)`` of a determinant."""
    n_a = bin(det & 0x5555555555555555).count("1")
    n_b = bin(det & 0xAAAAAAAAAAAAAAAA).count("1")
    return n_a, n_b


@dataclass(frozen=True)
class SectorBasis:
    """Canonically ordered determinants with fixed ``(n_alpha, n_beta)``."""

    n_orb: int
    n_alpha: int
    n_beta: int
    determinants: tuple[Determinant, ...]
    _lookup: dict[Determinant, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_lookup", {d: k for k, d in enumerate(self.determinants)})

    def __len__(self) -> int:
        return len(self.determinants)

    @property
    def size(self) -> int:
        return len(self.determinants)

    def index(self, det: Determinant) -> int:
        """Position of ``det`` in the basis; ``KeyError`` when absent."""
        return self._lookup[det]

    def __contains__(self, det: object) -> bool:
        return det in self._lookup

    def basis_vector(self, det: Determinant) -> np.ndarray:
        v = np.zeros(self.size)
        v[self.index(det)] = 1.0
        return v


def build_sector_basis(n_orb: int, n_alpha: int, n_beta: int) -> SectorBasis:
    """Enumerate every determinant of ``n_orb`` spatial orbitals in a sector.

    Determinants are sorted by bitmask value.

    Raises:
        ValueError: if an electron count lies outside ``[0, n_orb]``.
    """
    if n_orb < 0:
        raise ValueError(f"n_orb must be non-negative, got {n_orb}")
    for label, n in (("n_alpha", n_alpha), ("n_beta", n_beta)):
        if not 0 <= n <= n_orb:
            raise ValueError(f"{label}={n} outside [0, {n_orb}]")
    dets = [
        make_determinant(occ_a, occ_b)
        for occ_a in itertools.combinations(range(n_orb), n_alpha)
        for occ_b in itertools.combinations(range(n_orb), n_beta)
    ]
    dets.sort()
    assert len(dets) == comb(n_orb, n_alpha) * comb(n_orb, n_beta)
    return SectorBasis(n_orb, n_alpha, n_beta, tuple(dets))


def all_sectors(n_orb: int) -> list[SectorBasis]:
    """Every ``(n_alpha, n_beta)`` sector of ``n_orb`` orbitals, in lexicographic order."""
    return [
        build_sector_basis(n_orb, na, nb)
        for na in range(n_orb + 1)
        for nb in range(n_orb + 1)
    ]


class SparseOperator:
    """Immutable real sparse matrix in canonical CSR form.

    Column indices are sorted within each row and no explicit zeros are stored,
    so two equal operators have identical ``indptr``/``indices``/``data``.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix) -> None:
        m = sp.csr_array(matrix, dtype=float, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        m.data.setflags(write=False)
        m.indices.setflags(write=False)
        m.indptr.setflags(write=False)
        self._m = m

    @classmethod
    def identity(cls, dim: int) -> SparseOperator:
        return cls(sp.identity(dim, format="csr"))

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> SparseOperator:
        return cls(sp.csr_array((rows, rows if cols is None else cols)))

    @classmethod
    def from_triplets(cls, rows: Sequence[int], cols: Sequence[int], values: Sequence[float], shape: tuple[int, int]) -> SparseOperator:
        return cls(sp.coo_array((values, (rows, cols)), shape=shape))

    @property
    def shape(self) -> tuple[int, int]:
        return self._m.shape

    @property
    def dim(self) -> int:
        rows, cols = self._m.shape
        if rows != cols:
            raise ValueError(f"operator of shape {self._m.shape} is not square")
        return rows

    @property
    def nnz(self) -> int:
        return self._m.nnz

    @property
    def csr(self) -> sp.csr_array:
        """The underlying scipy matrix (read-only buffers)."""
        return self._m

    def toarray(self) -> np.ndarray:
        return self._m.toarray()

    def transpose(self) -> SparseOperator:
        return SparseOperator(self._m.T)

    @property
    def T(self) -> SparseOperator:
        return self.transpose()

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-vector (or matrix-matrix, for 2-D ``v``) product."""
        v = np.asarray(v)
        if v.shape[0] != self.shape[1]:
            raise ValueError(f"vector of length {v.shape[0]} does not match operator shape {self.shape}")
        return self._m @ v

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._m.data))) if self._m.nnz else 0.0

    def frobenius(self) -> float:
        return float(np.linalg.norm(self._m.data))

    def inner(self, other: SparseOperator) -> float:
        """Trace inner product ``tr(self^T other)``."""
        return float((self._m.multiply(other._m)).sum())

    def commutator(self, other: SparseOperator) -> SparseOperator:
        return self @ other - other @ self

    def __add__(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator(self._m + other._m)

    def __sub__(self, other: SparseOperator) -> SparseOperator:
        return SparseOperator(self._m - other._m)

    def __neg__(self) -> SparseOperator:
        return SparseOperator(-self._m)

    def __mul__(self, scalar: float) -> SparseOperator:
        return SparseOperator(self._m * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> SparseOperator:
        return SparseOperator(self._m / float(scalar))

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self._m @ other._m)
        return self.apply(other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        a, b = self._m, other._m
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SparseOperator(shape={self.shape}, nnz={self.nnz})"


def _ladder(kind: Kind, index: int, det: Determinant) -> tuple[int, Determinant] | None:
    """Act with one ladder operator on a determinant; ``None`` when annihilated."""
    bit = 1 << index
    occupied = bool(det & bit)
    if (kind is Kind.CREATE) == occupied:
        return None
    sign = -1 if bin(det & (bit - 1)).count("1") % 2 else 1
    return sign, det ^ bit


def apply_string(factors: Sequence[tuple[Kind, SpinOrbital]], det: Determinant) -> tuple[int, Determinant] | None:
    """Act with a product of ladder operators on one determinant.

    ``factors`` is read as written, so the rightmost factor acts first.
    """
    sign = 1
    for kind, orb in reversed(factors):
        hit = _ladder(Kind(kind), orb.index, det)
        if hit is None:
            return None
        s, det = hit
        sign *= s
    return sign, det


def _check_orbital(orb: SpinOrbital, n_orb: int) -> None:
    if not 0 <= orb.spatial < n_orb:
        raise ValueError(f"spin orbital {orb!r} outside {n_orb} spatial orbitals")


def elementary(kind: Kind | str, orb: SpinOrbital, source: SectorBasis, target: SectorBasis) -> SparseOperator:
    """Matrix of a creation or annihilation operator between two sectors.

    Raises:
        ValueError: if ``target`` is not ``source`` with one electron of the
            orbital's spin added (create) or removed (annihilate).
    """
    kind = Kind(kind)
    if source.n_orb != target.n_orb:
        raise ValueError("sectors have different orbital counts")
    _check_orbital(orb, source.n_orb)
    step = 1 if kind is Kind.CREATE else -1
    expected = [source.n_alpha, source.n_beta]
    expected[orb.spin] += step
    if (target.n_alpha, target.n_beta) != tuple(expected):
        raise ValueError(
            f"{kind.value} {orb!r} maps sector ({source.n_alpha},{source.n_beta}) "
            f"to ({expected[0]},{expected[1]}), not ({target.n_alpha},{target.n_beta})"
        )
    rows, cols, vals = [], [], []
    for col, det in enumerate(source.determinants):
        hit = _ladder(kind, orb.index, det)
        if hit is not None:
            sign, new = hit
            rows.append(target.index(new))
            cols.append(col)
            vals.append(sign)
    return SparseOperator.from_triplets(rows, cols, vals, (target.size, source.size))


def compose_number_conserving(factors: Sequence[tuple[Kind | str, SpinOrbital]], basis: SectorBasis) -> SparseOperator:
    """Matrix of a ladder-operator product that maps ``basis`` onto itself.

    Raises:
        ValueError: if the string changes the number of alpha or beta electrons.
    """
    factors = [(Kind(k), orb) for k, orb in factors]
    balance = [0, 0]
    for kind, orb in factors:
        _check_orbital(orb, basis.n_orb)
        balance[orb.spin] += 1 if kind is Kind.CREATE else -1
    if balance != [0, 0]:
        raise ValueError(f"operator string changes (n_alpha, n_beta) by {tuple(balance)}")
    rows, cols, vals = [], [], []
    for col, det in enumerate(basis.determinants):
        hit = apply_string(factors, det)
        if hit is not None:
            sign, new = hit
            rows.append(basis.index(new))
            cols.append(col)
            vals.append(sign)
    return SparseOperator.from_triplets(rows, cols, vals, (basis.size, basis.size))


def block_diagonal(blocks: Sequence[SparseOperator]) -> SparseOperator:
    """Direct sum of per-sector operators."""
    return SparseOperator(sp.block_diag([b.csr for b in blocks], format="csr"))
