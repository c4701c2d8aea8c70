"""Reference computations kept independent of the closed-form machinery.

Nothing here imports :mod:`spinad.closedform`; the test-suite relies on that
separation when it compares the two.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

DenseMatrix = np.ndarray

_TAYLOR_TERMS = 20
_SCALED_NORM = 0.5


class MinimalPolynomialNotFound(LookupError):
    pass


def expm_dense(M: DenseMatrix) -> DenseMatrix:
    """Matrix exponential by scaling and squaring around a 20-term Taylor series.

    M is scaled by 2^-s so that its 1-norm is at most 0.5. The truncation
    error of the series is then below 0.5^21 / 21! relative, and the s
    squarings amplify rounding by roughly ||M||_1. That keeps the error under
    1e-13 for ||M||_1 <= 16.

    Raises:
        ValueError: for non-square or non-finite input.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    n = M.shape[0]
    norm = np.max(np.sum(np.abs(M), axis=0)) if n else 0.0
    s = max(0, math.ceil(math.log2(norm / _SCALED_NORM))) if norm > _SCALED_NORM else 0
    A = M / 2.0**s
    result = np.eye(n)
    for k in range(_TAYLOR_TERMS, 0, -1):
        result = np.eye(n) + (A @ result) / k
    for _ in range(s):
        result = result @ result
    return result


def _odd_power_columns(M: DenseMatrix, top_degree: int) -> list[np.ndarray]:
    sq = M @ M
    cols = [M]
    while 2 * len(cols) - 1 < top_degree:
        cols.append(cols[-1] @ sq)
    return [c.ravel() for c in cols]


def minimal_polynomial_bruteforce(M: DenseMatrix, max_order: int = 11) -> np.ndarray:
    """Smallest monic odd polynomial p with p(M) = 0, as coefficients lowest degree first.

    Degrees 3, 5, ... are tried in turn. For each, the top power is regressed
    onto the lower odd powers by a QR least-squares solve. The first degree
    whose max-abs residual is within 1e-10 of max-abs of the top power wins.
    For example, a fermionic single generator gives ``[0, 1, 0, 1]``, i.e.
    x^3 + x.

    Raises:
        MinimalPolynomialNotFound: if no degree up to ``max_order`` succeeds.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    cols = _odd_power_columns(M, max_order)
    for m in range(1, (max_order - 1) // 2 + 1):
        target = cols[m]
        scale = np.max(np.abs(target)) if target.size else 0.0
        poly = np.zeros(2 * m + 2)
        poly[-1] = 1.0
        if scale == 0.0:
            return poly
        Q, R = np.linalg.qr(np.column_stack(cols[:m]))
        diag = np.abs(np.diag(R))
        keep = diag > 1e-12 * max(diag.max(), 1.0)
        sol = np.zeros(m)
        if keep.any():
            Rk = R[np.ix_(keep, keep)]
            sol[keep] = np.linalg.solve(Rk, (Q.T @ target)[keep])
        fit = np.column_stack(cols[:m]) @ sol
        if np.max(np.abs(fit - target)) <= 1e-10 * scale:
            poly[1 : 2 * m : 2] = -sol
            return poly
    raise MinimalPolynomialNotFound(f"no monic odd polynomial of degree <= {max_order} annihilates the matrix")


def relation_from_monic(poly: np.ndarray) -> list[float]:
    """Turn ``x^(2m+1) + sum a_j x^(2j+1)`` into ``[c_0, ..., c_(m-1)]`` with c_j = -a_j."""
    return [-float(a) for a in poly[1:-1:2]]


def per_sector_degrees(blocks: Sequence[DenseMatrix], max_order: int = 11) -> list[int | None]:
    """Minimal odd degree on each sector block; ``None`` for blocks that vanish.

    A small sector can satisfy a shorter relation than the full operator, so
    a family relation must be checked on the direct sum of all sectors.
    """
    out: list[int | None] = []
    for block in blocks:
        block = np.asarray(block, dtype=float)
        if block.size == 0 or not np.any(block):
            out.append(None)
            continue
        out.append(len(minimal_polynomial_bruteforce(block, max_order)) - 1)
    return out
