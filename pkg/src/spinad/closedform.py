"""Polynomial relations and closed-form exponentials of excitation generators.

A real skew-symmetric generator G whose odd powers close,

    G^(2m+1) = c_0 G + c_1 G^3 + ... + c_(m-1) G^(2m-1),

has eigenvalues 0 and +-i S_n, where -S_n^2 are the roots of
x^m - c_(m-1) x^(m-1) - ... - c_0. Its exponential then truncates to

    exp(tG) = I + sum_n sum_{p odd} k_n^(p) sin(S_n t) G^p
                + sum_n sum_{p even} k_n^(p) (cos(S_n t) - 1) G^p.
"""

from __future__ import annotations

import functools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from spinad.constants import MINPOLY_RTOL, ROOT_IMAG_TOL, ROOT_SEPARATION_TOL
from spinad.families import ClosedFormFamily
from spinad.fock import SparseOperator

__all__ = [
    "ClosedFormCoefficients",
    "ClosedFormFamily",
    "DegenerateSpectrumError",
    "PolynomialRelation",
    "RelationNotFoundError",
    "apply_exponential",
    "closed_form_for",
    "derive_closed_form",
    "exponential_matrix",
    "family_relation",
    "find_minimal_polynomial",
    "golden_coefficients",
    "quintic_recurrence_functions",
    "quintic_recurrence_roots",
    "verify_relation",
]


class RelationNotFoundError(LookupError):
    """No odd polynomial relation of admissible order annihilates the operator."""


class DegenerateSpectrumError(ValueError):
    """The characteristic roots are repeated, complex or non-negative."""

    def __init__(self, message: str, roots: Sequence[complex]) -> None:
        super().__init__(f"{message}; roots = {[complex(r) for r in roots]}")
        self.roots = list(roots)


@dataclass(frozen=True)
class PolynomialRelation:
    """``G^(2m+1) = sum_j coeffs[j] G^(2j+1)`` for ``j = 0 .. m-1``.

    ``exact`` optionally carries the same coefficients as fractions; root
    finding then starts from them instead of the rounded floats.
    """

    coeffs: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.exact is None and all(isinstance(c, (int, Fraction)) for c in self.coeffs):
            object.__setattr__(self, "exact", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("a relation needs at least one coefficient")
        if self.exact is not None and len(self.exact) != len(self.coeffs):
            raise ValueError("exact and float coefficients differ in length")

    @property
    def m(self) -> int:
        return len(self.coeffs)

    @property
    def order(self) -> int:
        return 2 * self.m + 1

    @classmethod
    def from_lowest_power_form(cls, coeffs: Sequence[float | Fraction]) -> PolynomialRelation:
        """Convert ``G = d_1 G^3 + d_2 G^5 + ... + d_m G^(2m+1)`` to the monic form."""
        d = [Fraction(c) if isinstance(c, (int, Fraction)) else c for c in coeffs]
        top = d[-1]
        if top == 0:
            raise ValueError("leading coefficient is zero")
        return cls(tuple([1 / top] + [-c / top for c in d[:-1]]))

    @classmethod
    def parse(cls, text: str) -> PolynomialRelation:
        """Parse a comma-separated list such as ``"-1/2, -3/2"`` or ``"-0.25,-1.875"``."""
        try:
            return cls(tuple(Fraction(tok.strip()) for tok in text.split(",")))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse relation coefficients {text!r}") from exc

    def characteristic(self, dtype=float) -> np.ndarray:
        """Coefficients (highest first) of ``x^m - sum_j c_j x^j`` in ``x = G^2``."""
        if self.exact is not None and dtype is not float:
            one = np.asarray(1, dtype=dtype)
            vals = [one * c.numerator / (one * c.denominator) for c in self.exact]
        else:
            vals = list(self.coeffs)
        return np.concatenate([[1], -np.asarray(vals[::-1], dtype=dtype)]).astype(dtype)

    def monic_odd_polynomial(self) -> np.ndarray:
        """Coefficients of ``x^(2m+1) - sum_j c_j x^(2j+1)``, lowest degree first."""
        out = np.zeros(self.order + 1)
        out[self.order] = 1.0
        for j, c in enumerate(self.coeffs):
            out[2 * j + 1] = -c
        return out


def _frac(num: int, den: int = 1) -> Fraction:
    return Fraction(num, den)


#: The eleventh-order coefficients exactly as tabulated alongside the
#: triplet-coupled double; they multiply G^3, G^5, ..., G^11 in an identity
#: for G itself (see :meth:`PolynomialRelation.from_lowest_power_form`).
PUBLISHED_ELEVENTH = (_frac(-113, 6), _frac(-587, 6), _frac(-613, 3), _frac(-176), _frac(-48))
PUBLISHED_NINTH = (_frac(-1, 4), _frac(-15, 8), _frac(-35, 8), _frac(-15, 4))
PUBLISHED_QUINTIC = (_frac(-1, 2), _frac(-3, 2))

_RELATIONS = {
    ClosedFormFamily.CUBIC: PolynomialRelation((-1,)),
    ClosedFormFamily.QUINTIC: PolynomialRelation(PUBLISHED_QUINTIC),
    ClosedFormFamily.NINTH: PolynomialRelation(PUBLISHED_NINTH),
    ClosedFormFamily.ELEVENTH: PolynomialRelation.from_lowest_power_form(PUBLISHED_ELEVENTH),
}


def family_relation(family: ClosedFormFamily | str) -> PolynomialRelation:
    """Monic odd relation obeyed by every generator of ``family``."""
    family = ClosedFormFamily(family)
    if family is ClosedFormFamily.SA_SINGLE_PAIR:
        raise ValueError("sa_single_pair is exponentiated as a product of two cubic factors")
    return _RELATIONS[family]


def _as_operator(G) -> SparseOperator:
    return G if isinstance(G, SparseOperator) else G.matrix


def _odd_powers(G, m: int) -> list[SparseOperator]:
    """``[G, G^3, ..., G^(2m+1)]``, from the generator's cache when available."""
    if hasattr(G, "power"):
        return [G.power(2 * j + 1) for j in range(m + 1)]
    M = _as_operator(G)
    sq = M @ M
    out = [M]
    for _ in range(m):
        out.append(out[-1] @ sq)
    return out


def verify_relation(G, rel: PolynomialRelation, *, relative: bool = False) -> float:
    """Max-abs residual of ``rel`` evaluated at ``G``.

    With ``relative=True`` the residual is divided by max-abs of G^(2m+1)
    (zero operators give zero).
    """
    powers = _odd_powers(G, rel.m)
    residual = powers[-1]
    for c, P in zip(rel.coeffs, powers[:-1]):
        residual = residual - c * P
    res = residual.max_abs()
    if relative:
        scale = powers[-1].max_abs()
        return res / scale if scale else res
    return res


def find_minimal_polynomial(G, max_order: int = 11) -> PolynomialRelation:
    """Lowest-order odd relation satisfied by ``G`` (least squares on vectorized powers).

    Raises:
        ValueError: if ``max_order`` is not an odd integer >= 3.
        RelationNotFoundError: if no order up to ``max_order`` fits within
            ``MINPOLY_RTOL`` relative to max-abs of the highest power.
    """
    if max_order < 3 or max_order % 2 == 0:
        raise ValueError(f"max_order must be odd and >= 3, got {max_order}")
    m_max = (max_order - 1) // 2
    powers = _odd_powers(G, m_max)
    vecs = [P.toarray().ravel() for P in powers]
    for m in range(1, m_max + 1):
        target = vecs[m]
        scale = np.max(np.abs(target)) if target.size else 0.0
        if scale == 0.0:
            return PolynomialRelation((0.0,) * m)
        basis = np.column_stack(vecs[:m])
        coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
        if np.max(np.abs(basis @ coeffs - target)) <= MINPOLY_RTOL * scale:
            return PolynomialRelation(tuple(coeffs))
    raise RelationNotFoundError(f"no odd relation of order <= {max_order}")


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """Frequencies ``S[n]`` and amplitudes ``k[n, p-1]`` for ``p = 1 .. 2m``.

    Rows are sorted by descending frequency.
    """

    S: np.ndarray
    k: np.ndarray
    relation: PolynomialRelation | None = None
    family: ClosedFormFamily | None = None

    def __post_init__(self) -> None:
        S = np.asarray(self.S, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if k.shape != (S.size, 2 * S.size):
            raise ValueError(f"k must have shape ({S.size}, {2 * S.size}), got {k.shape}")
        order = np.argsort(-S, kind="stable")
        S, k = S[order], k[order]
        S.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "k", k)

    @property
    def m(self) -> int:
        return self.S.size

    def amplitudes(self, p: int) -> np.ndarray:
        """Column ``k_n^(p)`` over all ``n``."""
        return self.k[:, p - 1]

    def functions(self, theta: float) -> np.ndarray:
        """``[f_1(theta), ..., f_2m(theta)]`` so that exp(tG) = I + sum_p f_p G^p."""
        st = np.sin(self.S * theta)
        # cos(x) - 1 = -2 sin^2(x/2) keeps small angles accurate
        ct = -2.0 * np.sin(0.5 * self.S * theta) ** 2
        out = np.empty(2 * self.m)
        out[0::2] = st @ self.k[:, 0::2]
        out[1::2] = ct @ self.k[:, 1::2]
        return out

    def taylor_residual(self) -> float:
        """Max deviation of the r-th derivative of f_p at 0 from delta_rp, r, p <= 2m."""
        worst = 0.0
        for r in range(1, 2 * self.m + 1):
            # d^r/dt^r sin(St) and (cos(St) - 1) at t = 0
            if r % 2:
                factor = (-1) ** ((r - 1) // 2) * self.S**r
                cols = range(0, 2 * self.m, 2)
            else:
                factor = (-1) ** (r // 2) * self.S**r
                cols = range(1, 2 * self.m, 2)
            for c in range(2 * self.m):
                value = float(factor @ self.k[:, c]) if c in cols else 0.0
                worst = max(worst, abs(value - (1.0 if c + 1 == r else 0.0)))
        return worst

    def to_dict(self) -> dict:
        return {
            "family": None if self.family is None else self.family.value,
            "relation": None if self.relation is None else list(self.relation.coeffs),
            "entries": [{"S": float(s), "k": [float(x) for x in row]} for s, row in zip(self.S, self.k)],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> ClosedFormCoefficients:
        entries = data["entries"]
        rel = data.get("relation")
        fam = data.get("family")
        return cls(
            S=[e["S"] for e in entries],
            k=[e["k"] for e in entries],
            relation=None if rel is None else PolynomialRelation(tuple(rel)),
            family=None if fam is None else ClosedFormFamily(fam),
        )

    @classmethod
    def from_json(cls, text: str) -> ClosedFormCoefficients:
        return cls.from_dict(json.loads(text))


def characteristic_roots(rel: PolynomialRelation) -> np.ndarray:
    """Roots ``lambda_n = -S_n^2`` of the relation, sorted ascending (most negative first).

    Raises:
        DegenerateSpectrumError: on complex, non-negative or repeated roots.
    """
    roots = np.roots(rel.characteristic())
    if roots.size != rel.m:
        # np.roots drops leading zeros only, so a shortfall means zero roots
        roots = np.concatenate([roots, np.zeros(rel.m - roots.size)])
    if np.any(np.abs(roots.imag) > ROOT_IMAG_TOL * np.maximum(1.0, np.abs(roots))):
        raise DegenerateSpectrumError("complex characteristic roots", roots)
    lam = np.sort(roots.real)
    if np.any(lam >= 0):
        raise DegenerateSpectrumError("non-negative characteristic roots", lam)
    if lam.size > 1 and np.min(np.diff(lam)) < ROOT_SEPARATION_TOL * max(1.0, np.max(np.abs(lam))):
        raise DegenerateSpectrumError("repeated characteristic roots", lam)
    # Newton polish in extended precision; the amplitudes amplify root errors
    coeffs = rel.characteristic(np.longdouble)
    dcoeffs = coeffs[:-1] * np.arange(rel.m, 0, -1, dtype=np.longdouble)
    lam = lam.astype(np.longdouble)
    for _ in range(4):
        lam = lam - np.polyval(coeffs, lam) / np.polyval(dcoeffs, lam)
    return lam


def _lagrange_rows(x: np.ndarray) -> np.ndarray:
    """``L[n, j]``: coefficient of y^j in prod_{q != n} (y - x_q) / (x_n - x_q)."""
    m = x.size
    L = np.zeros((m, m), dtype=x.dtype)
    for n in range(m):
        poly = np.ones(1, dtype=x.dtype)  # lowest degree first
        denom = x.dtype.type(1)
        for q in range(m):
            if q == n:
                continue
            poly = np.concatenate([[0], poly]) - x[q] * np.concatenate([poly, [0]])
            denom *= x[n] - x[q]
        L[n] = poly / denom
    return L


def derive_closed_form(rel: PolynomialRelation, family: ClosedFormFamily | None = None) -> ClosedFormCoefficients:
    """Synthesize frequencies and amplitudes from a polynomial relation.

    The amplitudes make I + sum_p f_p(t) G^p agree with exp(tG) on every
    eigenvalue 0, +-i S_q of G. Splitting into imaginary and real parts gives,
    for each frequency n, the systems

        sum_j (-1)^j     S_q^(2j+1) k_n^(2j+1) = delta_nq
        sum_j (-1)^(j+1) S_q^(2j+2) k_n^(2j+2) = delta_nq

    which are Vandermonde in x = S^2 and are inverted through Lagrange
    polynomials.

    Raises:
        DegenerateSpectrumError: when the characteristic roots are not
            distinct and strictly negative.
    """
    S, k = _synthesize(rel)
    return ClosedFormCoefficients(S.astype(float), k.astype(float), relation=rel, family=family)


def _synthesize(rel: PolynomialRelation) -> tuple[np.ndarray, np.ndarray]:
    """Extended-precision ``(S, k)`` behind :func:`derive_closed_form`."""
    lam = characteristic_roots(rel)
    x = -lam
    S = np.sqrt(x)
    L = _lagrange_rows(x)
    m = rel.m
    k = np.zeros((m, 2 * m), dtype=x.dtype)
    signs = np.array([(-1) ** j for j in range(m)], dtype=x.dtype)
    k[:, 0::2] = L * signs / S[:, None]
    k[:, 1::2] = -L * signs / x[:, None]
    order = np.argsort(-S, kind="stable")
    return S[order], k[order]


@functools.lru_cache(maxsize=None)
def _family_synthesis(family: ClosedFormFamily) -> tuple[np.ndarray, np.ndarray]:
    return _synthesize(family_relation(family))


@functools.lru_cache(maxsize=None)
def closed_form_for(family: ClosedFormFamily) -> ClosedFormCoefficients:
    """Synthesized coefficients for a family's relation (cached)."""
    family = ClosedFormFamily(family)
    return derive_closed_form(family_relation(family), family)


def _table(rows: list[tuple[float, ...]], m: int, family: ClosedFormFamily) -> ClosedFormCoefficients:
    # table columns: odd k's, even k's, then S
    S = [row[-1] for row in rows]
    k = np.zeros((m, 2 * m))
    for n, row in enumerate(rows):
        k[n, 0::2] = row[:m]
        k[n, 1::2] = row[m : 2 * m]
    return ClosedFormCoefficients(S, k, relation=family_relation(family), family=family)


def golden_coefficients(family: ClosedFormFamily | str) -> ClosedFormCoefficients:
    """Hard-coded published coefficient tables for the quintic, ninth and eleventh families.

    Raises:
        ValueError: for ``cubic`` and ``sa_single_pair``, which use the
            elementary sin / (1 - cos) form instead.
    """
    family = ClosedFormFamily(family)
    r2, r3 = math.sqrt(2.0), math.sqrt(3.0)
    if family is ClosedFormFamily.QUINTIC:
        rows = [
            (-1, -2, 1, 2, 1),
            (2 * r2, 2 * r2, -4, -4, r2 / 2),
        ]
        return _table(rows, 2, family)
    if family is ClosedFormFamily.NINTH:
        rows = [
            (2 / 3, 13 / 3, 22 / 3, 8 / 3, -2 / 3, -13 / 3, -22 / 3, -8 / 3, 1),
            (-r2 / 42, -r2 / 6, -r2 / 3, -4 * r2 / 21, 1 / 42, 1 / 6, 1 / 3, 4 / 21, r2),
            (-8 * r2 / 3, -44 * r2 / 3, -52 * r2 / 3, -16 * r2 / 3, 16 / 3, 88 / 3, 104 / 3, 32 / 3, r2 / 2),
            (128 / 21, 64 / 3, 64 / 3, 128 / 21, -256 / 21, -128 / 3, -128 / 3, -256 / 21, 1 / 2),
        ]
        return _table(rows, 4, family)
    if family is ClosedFormFamily.ELEVENTH:
        rows = [
            (r2 / 1150, 11 * r2 / 690, 133 * r2 / 1725, 16 * r2 / 115, 48 * r2 / 575,
             -1 / 1150, -11 / 690, -133 / 1725, -16 / 115, -48 / 575, r2),
            (8 * r2 / 5, 404 * r2 / 15, 308 * r2 / 3, 608 * r2 / 5, 192 * r2 / 5,
             -16 / 5, -808 / 15, -616 / 3, -1216 / 5, -384 / 5, r2 / 2),
            (-54 * r3 / 25, -171 * r3 / 5, -2718 * r3 / 25, -576 * r3 / 5, -864 * r3 / 25,
             162 / 25, 513 / 5, 8154 / 25, 1728 / 5, 2592 / 25, r3 / 3),
            (-16 * r3 / 75, -56 * r3 / 15, -1192 * r3 / 75, -112 * r3 / 5, -192 * r3 / 25,
             32 / 75, 112 / 15, 2384 / 75, 224 / 5, 384 / 25, r3 / 2),
            (432 * r3 / 115, 2952 * r3 / 115, 1368 * r3 / 23, 6192 * r3 / 115, 1728 * r3 / 115,
             -2592 / 115, -17712 / 115, -8208 / 23, -37152 / 115, -10368 / 115, r3 / 6),
        ]  # fmt: skip
        return _table(rows, 5, family)
    raise ValueError(f"no coefficient table for {family.value}; it uses the elementary cubic form")


def quintic_recurrence_roots(A: float, B: float) -> tuple[float, float, float, float]:
    """Eigenvalues and weights ``(lambda_1, lambda_2, c_1, c_2)`` of the K-recurrence.

    The recurrence K1_n = A K3_(n-1), K3_n = B K3_(n-1) + K1_(n-1) has
    solution K3_n = c_1 lambda_1^n + c_2 lambda_2^n.
    """
    disc = math.sqrt(4 * A + B * B)
    return (B - disc) / 2, (B + disc) / 2, 0.5 - B / (2 * disc), 0.5 + B / (2 * disc)


def quintic_recurrence_functions(A: float, B: float, theta: float, n_terms: int = 12) -> tuple[float, float, float, float]:
    """Partial sums of f_1, f_3, f_2, f_4 from iterating the K-recurrence ``n_terms`` times.

    Independent of :func:`derive_closed_form`; used to cross-check it.
    """
    K1, K3 = A, B
    f1 = theta
    f3 = theta**3 / 6
    f2 = theta**2 / 2
    f4 = theta**4 / 24
    for n in range(1, n_terms + 1):
        f1 += theta ** (2 * n + 3) / math.factorial(2 * n + 3) * K1
        f3 += theta ** (2 * n + 3) / math.factorial(2 * n + 3) * K3
        # even powers obey the same recurrence, shifted by one in theta
        f2 += theta ** (2 * n + 4) / math.factorial(2 * n + 4) * K1
        f4 += theta ** (2 * n + 4) / math.factorial(2 * n + 4) * K3
        K1, K3 = A * K3, B * K3 + K1
    return f1, f3, f2, f4


def _cubic_apply(G, theta: float, v: np.ndarray) -> np.ndarray:
    Gv = G.matrix @ v
    return v + math.sin(theta) * Gv + 2.0 * math.sin(0.5 * theta) ** 2 * (G.matrix @ Gv)


def apply_exponential(G, theta: float, v: np.ndarray) -> np.ndarray:
    """``exp(theta G) v`` from the generator family's truncated closed form.

    ``v`` may be a vector or a ``(dim, k)`` block of column vectors.

    Raises:
        ValueError: if ``v`` does not match the generator's dimension.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim not in (1, 2) or v.shape[0] != G.dim:
        raise ValueError(f"vector of shape {v.shape} does not match generator dimension {G.dim}")
    if theta == 0.0:
        return v.copy()
    family = G.family
    if family is ClosedFormFamily.SA_SINGLE_PAIR:
        half = theta / math.sqrt(2.0)
        first, second = G.parts
        return _cubic_apply(first, half, _cubic_apply(second, half, v))
    if family is ClosedFormFamily.CUBIC:
        return _cubic_apply(G, theta, v)
    S, stacked_ops = _frequency_operators(G)
    m = S.size
    w = np.concatenate([np.sin(S * theta), -2.0 * np.sin(0.5 * S * theta) ** 2])
    stacked = stacked_ops @ v
    if v.ndim == 1:
        return v + w @ stacked.reshape(2 * m, G.dim)
    return v + np.tensordot(w, stacked.reshape(2 * m, G.dim, -1), axes=1)


# Above this dimension the per-frequency operators are summed in float64
# sparse arithmetic instead of dense extended precision.
_DENSE_ACCUMULATION_LIMIT = 3000
# Entries that vanish exactly come out of the extended-precision sum at the
# 1e-17 level; they are dropped to keep the operators sparse.
_DROP_TOL = 1e-15


def _frequency_operators(G) -> tuple[np.ndarray, sp.csr_array]:
    """Frequencies and the stacked operators ``[C_1; ...; C_m; D_1; ...; D_m]``.

    C_n = sum_{p odd} k_n^(p) G^p and D_n = sum_{p even} k_n^(p) G^p, so
    exp(tG) = I + sum_n sin(S_n t) C_n + (cos(S_n t) - 1) D_n. This is the
    closed form with its terms grouped by frequency. G^p is taken as
    scale^p N^p with N the generator's integer matrix, so the powers are
    exact. The amplitudes reach ~10^3 and nearly cancel, so the sums run in
    extended precision. Summing rounded float powers would leave ~1e-12
    errors for the eleventh-order family. Cached per generator.
    """

    def build():
        S, k = _family_synthesis(G.family)
        m, dim = S.size, G.dim
        q = G.scale_sq
        root = np.sqrt(np.longdouble(q.numerator) / np.longdouble(q.denominator))
        dense = dim <= _DENSE_ACCUMULATION_LIMIT
        acc = np.zeros((2 * m, dim, dim), dtype=np.longdouble) if dense else [None] * (2 * m)
        for p in range(1, 2 * m + 1):
            Np = G.integer_power(p)
            slot = 0 if p % 2 else m
            weights = k[:, p - 1] * root**p
            if dense:
                Np = Np.toarray().astype(np.longdouble)
                for n in range(m):
                    acc[slot + n] += weights[n] * Np
            else:
                for n in range(m):
                    term = float(weights[n]) * Np.csr
                    acc[slot + n] = term if acc[slot + n] is None else acc[slot + n] + term
        blocks = []
        for block in acc:
            block = sp.csr_array(np.asarray(block, dtype=float)) if dense else sp.csr_array(block)
            block.data[np.abs(block.data) < _DROP_TOL] = 0.0
            block.eliminate_zeros()
            blocks.append(block)
        return S.astype(float), sp.vstack(blocks, format="csr")

    return G.cached("frequency_operators", build)


def exponential_matrix(G, theta: float) -> np.ndarray:
    """Dense ``exp(theta G)`` assembled column by column through :func:`apply_exponential`."""
    return apply_exponential(G, theta, np.eye(G.dim))
