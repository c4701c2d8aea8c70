"""Factorized unitary product states, spin-free Hamiltonians and operator pools."""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from spinad.closedform import apply_exponential
from spinad.fock import Determinant, SectorBasis, SparseOperator, Spin, SpinOrbital, build_sector_basis, make_determinant
from spinad.operators import GeneratorId, GeneratorKind, build_E, build_generator, make_id


def closed_shell_reference(basis: SectorBasis) -> Determinant:
    """Determinant with the lowest ``n_alpha`` spatial orbitals doubly occupied."""
    if basis.n_alpha != basis.n_beta:
        raise ValueError(f"closed-shell reference needs n_alpha == n_beta, got ({basis.n_alpha}, {basis.n_beta})")
    occ = range(basis.n_alpha)
    return make_determinant(occ, occ)


@dataclass(frozen=True)
class ProductAnsatz:
    """``prod_J exp(theta_J G_J) |reference>``; ``factors[0]`` acts first."""

    basis: SectorBasis
    reference: Determinant
    factors: tuple[tuple[GeneratorId, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple((gid, float(t)) for gid, t in self.factors))
        if self.reference not in self.basis:
            raise ValueError("reference determinant is not in the sector basis")
        for gid, _ in self.factors:
            bad = [p for p in gid.spatial_orbitals() if p >= self.basis.n_orb]
            if bad:
                raise ValueError(f"factor {gid} uses orbital(s) {bad} outside the basis")

    @property
    def thetas(self) -> np.ndarray:
        return np.array([t for _, t in self.factors])

    @property
    def ids(self) -> list[GeneratorId]:
        return [gid for gid, _ in self.factors]

    def with_thetas(self, thetas: Sequence[float]) -> ProductAnsatz:
        if len(thetas) != len(self.factors):
            raise ValueError(f"expected {len(self.factors)} angles, got {len(thetas)}")
        return ProductAnsatz(self.basis, self.reference, tuple(zip(self.ids, thetas)))

    def generators(self):
        return [build_generator(gid, self.basis) for gid in self.ids]


def state(ansatz: ProductAnsatz) -> np.ndarray:
    """Normalized state vector of ``ansatz`` in its sector basis."""
    psi = ansatz.basis.basis_vector(ansatz.reference)
    for G, (_, theta) in zip(ansatz.generators(), ansatz.factors):
        psi = apply_exponential(G, theta, psi)
    return psi


class SpinFreeHamiltonian:
    """Real spin-free Hamiltonian

        H = sum_pq h_pq E_pq + 1/2 sum_pqrs g_pqrs (E_pq E_rs - delta_qr E_ps)

    with h symmetric and g carrying the 8-fold real-orbital index symmetry.
    """

    def __init__(self, one_body: np.ndarray, two_body: np.ndarray, *, atol: float = 1e-12) -> None:
        h = np.array(one_body, dtype=float)
        g = np.array(two_body, dtype=float)
        n = h.shape[0]
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise ValueError(f"inconsistent integral shapes {h.shape} and {g.shape}")
        if not np.allclose(h, h.T, atol=atol, rtol=0):
            raise ValueError("one-body integrals are not symmetric")
        for perm in _G_PERMUTATIONS[1:]:
            if not np.allclose(g, g.transpose(perm), atol=atol, rtol=0):
                raise ValueError("two-body integrals lack 8-fold symmetry")
        h.setflags(write=False)
        g.setflags(write=False)
        self.one_body = h
        self.two_body = g
        self._matrices: dict[SectorBasis, SparseOperator] = {}

    @property
    def n_orb(self) -> int:
        return self.one_body.shape[0]

    @classmethod
    def random(cls, n_orb: int, seed: int | None = None) -> SpinFreeHamiltonian:
        """Seeded synthetic integrals, h in [-1, 1] and g in [-0.5, 0.5]."""
        rng = np.random.default_rng(seed)
        h = rng.uniform(-1.0, 1.0, (n_orb, n_orb))
        h = 0.5 * (h + h.T)
        raw = rng.uniform(-0.5, 0.5, (n_orb,) * 4)
        # copy each canonical entry to its symmetry images so g is exactly symmetric
        g = np.empty_like(raw)
        for idx in itertools.product(range(n_orb), repeat=4):
            g[idx] = raw[_canonical_g(idx)]
        return cls(h, g)

    def matrix(self, basis: SectorBasis) -> SparseOperator:
        """Sparse matrix on ``basis`` (cached per basis)."""
        if basis.n_orb != self.n_orb:
            raise ValueError(f"Hamiltonian has {self.n_orb} orbitals, basis has {basis.n_orb}")
        cached = self._matrices.get(basis)
        if cached is not None:
            return cached
        n = self.n_orb
        E = [[build_E(p, q, basis) for q in range(n)] for p in range(n)]
        acc = SparseOperator.zeros(basis.size)
        for p, q in itertools.product(range(n), repeat=2):
            if self.one_body[p, q]:
                acc = acc + self.one_body[p, q] * E[p][q]
        for p, q, r, s in itertools.product(range(n), repeat=4):
            val = self.two_body[p, q, r, s]
            if not val:
                continue
            term = E[p][q] @ E[r][s]
            if q == r:
                term = term - E[p][s]
            acc = acc + (0.5 * val) * term
        return self._matrices.setdefault(basis, acc)

    def to_text(self) -> str:
        """One ``p q value`` or ``p q r s value`` line per symmetry-distinct nonzero term."""
        lines = []
        n = self.n_orb
        for p in range(n):
            for q in range(p, n):
                if self.one_body[p, q]:
                    lines.append(f"{p} {q} {float(self.one_body[p, q])!r}")
        for idx in itertools.product(range(n), repeat=4):
            if _canonical_g(idx) == idx and self.two_body[idx]:
                lines.append(f"{idx[0]} {idx[1]} {idx[2]} {idx[3]} {float(self.two_body[idx])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_orb: int | None = None) -> SpinFreeHamiltonian:
        """Parse the format written by :meth:`to_text`.

        Raises:
            ValueError: on malformed lines, negative or out-of-range indices,
                or two lines naming symmetry-equivalent terms.
        """
        one: dict[tuple[int, int], float] = {}
        two: dict[tuple[int, int, int, int], float] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                idx = tuple(int(t) for t in tok[:-1])
                val = float(tok[-1])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}") from exc
            if len(idx) not in (2, 4) or any(i < 0 for i in idx):
                raise ValueError(f"line {lineno}: expected 'p q value' or 'p q r s value', got {raw!r}")
            if len(idx) == 2:
                key = (min(idx), max(idx))
                table = one
            else:
                key = _canonical_g(idx)
                table = two
            if key in table:
                raise ValueError(f"line {lineno}: term {idx} duplicates an earlier symmetry-equivalent term")
            table[key] = val
        indices = [i for k in itertools.chain(one, two) for i in k]
        n = n_orb if n_orb is not None else (max(indices) + 1 if indices else 0)
        if indices and max(indices) >= n:
            raise ValueError(f"index {max(indices)} out of range for {n} orbitals")
        h = np.zeros((n, n))
        for (p, q), v in one.items():
            h[p, q] = h[q, p] = v
        g = np.zeros((n,) * 4)
        for key, v in two.items():
            for perm in _G_PERMUTATIONS:
                g[tuple(key[k] for k in perm)] = v
        return cls(h, g)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path, n_orb: int | None = None) -> SpinFreeHamiltonian:
        return cls.from_text(Path(path).read_text(), n_orb)


# (p,q,r,s) index permutations preserving real two-electron integrals
_G_PERMUTATIONS = [
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
]  # fmt: skip


def _canonical_g(idx: tuple[int, ...]) -> tuple[int, int, int, int]:
    return min(tuple(idx[k] for k in perm) for perm in _G_PERMUTATIONS)


def _hamiltonian_matrix(H, basis: SectorBasis) -> SparseOperator:
    if isinstance(H, SpinFreeHamiltonian):
        return H.matrix(basis)
    if not isinstance(H, SparseOperator):
        H = SparseOperator(H)
    if H.shape != (basis.size, basis.size):
        raise ValueError(f"Hamiltonian of shape {H.shape} does not act on a sector of size {basis.size}")
    return H


def energy(ansatz: ProductAnsatz, H) -> float:
    psi = state(ansatz)
    return float(psi @ (_hamiltonian_matrix(H, ansatz.basis) @ psi))


def energy_and_gradient(ansatz: ProductAnsatz, H) -> tuple[float, np.ndarray]:
    """Energy and all angle derivatives from one forward and one reverse sweep.

    The reverse sweep un-applies each factor from both the state and the
    costate lambda = U_N ... U_(J+1) H psi in turn, so dE/dtheta_J =
    2 <lambda_J | G_J | psi_J> costs O(1) exponential applications per factor.

    Raises:
        ValueError: if ``H`` does not act on the ansatz sector.
    """
    Hm = _hamiltonian_matrix(H, ansatz.basis)
    gens = ansatz.generators()
    psi = state(ansatz)
    lam = Hm @ psi
    E = float(psi @ lam)
    grad = np.zeros(len(gens))
    for J in range(len(gens) - 1, -1, -1):
        G, theta = gens[J], ansatz.factors[J][1]
        grad[J] = 2.0 * float(lam @ (G.matrix @ psi))
        psi = apply_exponential(G, -theta, psi)
        lam = apply_exponential(G, -theta, lam)
    return E, grad


def naive_gradient(ansatz: ProductAnsatz, H) -> np.ndarray:
    """Reference gradient rebuilding d psi / d theta_J from scratch for every J (quadratic cost)."""
    Hm = _hamiltonian_matrix(H, ansatz.basis)
    gens = ansatz.generators()
    thetas = ansatz.thetas
    psi = state(ansatz)
    Hpsi = Hm @ psi
    grad = np.zeros(len(gens))
    ref = ansatz.basis.basis_vector(ansatz.reference)
    for J in range(len(gens)):
        d = ref
        for K, (G, t) in enumerate(zip(gens, thetas)):
            d = apply_exponential(G, t, d)
            if K == J:
                d = G.matrix @ d
        grad[J] = 2.0 * float(Hpsi @ d)
    return grad


class PoolMode(str, enum.Enum):
    FERMIONIC_SD = "fermionic_sd"
    SA_SD_SINGLET_ONLY = "sa_sd_singlet_only"
    SA_SD_WITH_PRIME = "sa_sd_with_prime"


@dataclass(frozen=True)
class PoolSpec:
    """Singles-and-doubles pool over ``n_occ`` occupied and ``n_virt`` virtual spatial orbitals."""

    n_occ: int
    n_virt: int
    mode: PoolMode = PoolMode.SA_SD_WITH_PRIME

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", PoolMode(self.mode))
        if self.n_occ < 1 or self.n_virt < 1:
            raise ValueError(f"n_occ and n_virt must be >= 1, got ({self.n_occ}, {self.n_virt})")

    @property
    def n_orb(self) -> int:
        return self.n_occ + self.n_virt

    def basis(self) -> SectorBasis:
        return build_sector_basis(self.n_orb, self.n_occ, self.n_occ)


def count_parameters(spec: PoolSpec) -> int:
    """Closed-form pool size; equals ``len(enumerate_pool(spec))``.

    With o occupied and v virtual orbitals:

    * fermionic: 2ov + o^2 v^2 + 2 C(o,2) C(v,2)
    * spin-adapted with the triplet-coupled doubles: ov + ov(ov + 1)/2
    * spin-adapted singlet-coupled only: the above minus C(o,2) C(v,2)
    """
    o, v = spec.n_occ, spec.n_virt
    quads = comb(o, 2) * comb(v, 2)
    if spec.mode is PoolMode.FERMIONIC_SD:
        return 2 * o * v + o * o * v * v + 2 * quads
    full = o * v + o * v * (o * v + 1) // 2
    return full if spec.mode is PoolMode.SA_SD_WITH_PRIME else full - quads


def _fermionic_pool(occ: Sequence[int], virt: Sequence[int]) -> Iterable[GeneratorId]:
    for s in (Spin.ALPHA, Spin.BETA):
        for i in occ:
            for a in virt:
                yield GeneratorId(GeneratorKind.FERMIONIC_SINGLE, (SpinOrbital(a, s), SpinOrbital(i, s)))
    occ_so = sorted((SpinOrbital(p, s) for p in occ for s in Spin), key=lambda o: o.index)
    virt_so = sorted((SpinOrbital(p, s) for p in virt for s in Spin), key=lambda o: o.index)
    for a, b in itertools.combinations(virt_so, 2):
        for i, j in itertools.combinations(occ_so, 2):
            if sorted((a.spin, b.spin)) == sorted((i.spin, j.spin)):
                yield GeneratorId(GeneratorKind.FERMIONIC_DOUBLE, (a, b, i, j))


def _sa_pool(occ: Sequence[int], virt: Sequence[int], with_prime: bool) -> Iterable[GeneratorId]:
    for i in occ:
        for a in virt:
            yield make_id(GeneratorKind.SA_SINGLE, a, i)
    for i, j in itertools.combinations_with_replacement(occ, 2):
        for a, b in itertools.combinations_with_replacement(virt, 2):
            if a == b and i == j:
                yield make_id(GeneratorKind.SA_DOUBLE_AIAI, a, i)
            elif a == b:
                yield make_id(GeneratorKind.SA_DOUBLE_AIAJ, a, i, j)
            elif i == j:
                yield make_id(GeneratorKind.SA_DOUBLE_AIBI, a, b, i)
            else:
                yield make_id(GeneratorKind.SA_DOUBLE_AIBJ, a, b, i, j)
                if with_prime:
                    yield make_id(GeneratorKind.SA_DOUBLE_PRIME_AIBJ, a, b, i, j)


def enumerate_pool(spec: PoolSpec) -> list[GeneratorId]:
    """Canonical, duplicate-free generator ids; singles first, then doubles."""
    occ = list(range(spec.n_occ))
    virt = list(range(spec.n_occ, spec.n_orb))
    if spec.mode is PoolMode.FERMIONIC_SD:
        return list(_fermionic_pool(occ, virt))
    return list(_sa_pool(occ, virt, spec.mode is PoolMode.SA_SD_WITH_PRIME))


def reduction_ratio(n_occ: int, n_virt: int) -> float:
    """Fraction of fermionic parameters removed by the full spin-adapted pool."""
    fermionic = count_parameters(PoolSpec(n_occ, n_virt, PoolMode.FERMIONIC_SD))
    adapted = count_parameters(PoolSpec(n_occ, n_virt, PoolMode.SA_SD_WITH_PRIME))
    return 1.0 - adapted / fermionic
