"""Centered Gaussian measures: exact moments and polynomial inner products.

Moments come from the pair-product recursion

    E[x_i * x^beta] = sum_j Sigma_ij * beta_j * E[x^(beta - e_j)],

memoized per covariance, which keeps the cost polynomial in the size of the
moment table instead of the double-factorial pair-partition enumeration.
When the covariance entries are rational every moment is an exact Fraction;
this is what makes the reported inner products exact rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import pi, sqrt

import numpy as np

from .errors import DimensionMismatch
from .exact import Matrix, matrix as exact_matrix
from .polynomials import EXACT_TYPES, SparsePolynomial


def _normalize_sigma(sigma):
    """Return (rows, dim, exact_flag) with rows as tuple-of-tuples scalars."""
    if isinstance(sigma, GaussianMeasure):
        return sigma._rows, sigma.dim, sigma.is_exact
    if isinstance(sigma, np.ndarray):
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("covariance must be square")
        rows = tuple(tuple(float(x) for x in row) for row in sigma)
        return rows, sigma.shape[0], False
    rows = tuple(tuple(x for x in row) for row in sigma)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("covariance must be square")
    exact = all(isinstance(x, EXACT_TYPES) for row in rows for x in row)
    if exact:
        rows = tuple(tuple(Fraction(x) for x in row) for row in rows)
    else:
        rows = tuple(tuple(float(x) for x in row) for row in rows)
    return rows, n, exact


@dataclass(frozen=True)
class GaussianMeasure:
    """Centered Gaussian with a symmetric positive-definite covariance."""

    covariance: object

    def __post_init__(self):
        rows, dim, exact = _normalize_sigma(self.covariance)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "is_exact", exact)

    @property
    def normalization(self) -> float:
        """Density prefactor (2 pi)^(-N/2) det(Sigma)^(-1/2)."""
        arr = self.as_array()
        return (2 * pi) ** (-self.dim / 2) * np.linalg.det(arr) ** (-0.5)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self._rows])

    def exact_rows(self) -> Matrix:
        if not self.is_exact:
            raise ValueError("covariance is not exact")
        return exact_matrix(self._rows)

    def moment(self, alpha) -> object:
        return MomentTable(self).moment(alpha)


class MomentTable:
    """Per-covariance memo of monomial moments E[x^alpha].

    One table per evaluation context; tables are not shared across threads.
    """

    def __init__(self, sigma):
        self.rows, self.dim, self.is_exact = _normalize_sigma(sigma)
        one = Fraction(1) if self.is_exact else 1.0
        self._memo: dict[tuple[int, ...], object] = {(0,) * self.dim: one}

    def moment(self, alpha) -> object:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise DimensionMismatch(f"index {alpha} vs dim {self.dim}")
        if any(a < 0 for a in alpha):
            raise ValueError("exponents must be nonnegative")
        return self._moment(alpha)

    def _moment(self, alpha: tuple[int, ...]):
        cached = self._memo.get(alpha)
        if cached is not None:
            return cached
        if sum(alpha) % 2 == 1:
            out = Fraction(0) if self.is_exact else 0.0
            self._memo[alpha] = out
            return out
        i = next(k for k, a in enumerate(alpha) if a > 0)
        beta = list(alpha)
        beta[i] -= 1
        total = Fraction(0) if self.is_exact else 0.0
        for j, bj in enumerate(beta):
            if bj > 0 and self.rows[i][j] != 0:
                gamma = list(beta)
                gamma[j] -= 1
                total += self.rows[i][j] * bj * self._moment(tuple(gamma))
        self._memo[alpha] = total
        return total


def gaussian_moment(sigma, alpha) -> object:
    """E[x^alpha] for x ~ N(0, Sigma); exact Fraction when Sigma is rational."""
    return MomentTable(sigma).moment(alpha)


def inner_product(
    p: SparsePolynomial, q: SparsePolynomial, sigma, table: MomentTable | None = None
):
    """L^2(gamma) pairing <p, q> = integral of p * conj(q) dgamma.

    Sesquilinear: the second argument is conjugated, matching the complex L^2
    convention; for real polynomials this is the plain symmetric pairing.
    """
    if table is None:
        table = MomentTable(sigma)
    if p.dim != table.dim or q.dim != table.dim:
        raise DimensionMismatch(
            f"polynomials of dim {p.dim}/{q.dim} against measure of dim {table.dim}"
        )
    total = 0
    for a, ca in p.terms.items():
        for b, cb in q.terms.items():
            m = table.moment(tuple(x + y for x, y in zip(a, b)))
            if m != 0:
                cb = cb.conjugate() if isinstance(cb, complex) else cb
                total += ca * cb * m
    return total


def gram_matrix(fs, sigma, normalized: bool = False):
    """Pairwise inner products G[i][j] = <f_i, f_j>, Hermitian by construction.

    With ``normalized`` each entry is divided by sqrt(G_ii * G_jj); exact
    zeros and the unit diagonal survive the scaling exactly, so an orthogonal
    exact family normalizes to the literal identity matrix.
    """
    fs = list(fs)
    table = MomentTable(sigma)
    n = len(fs)
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            val = inner_product(fs[i], fs[j], sigma, table)
            g[i][j] = val
            if i != j:
                g[j][i] = val.conjugate() if isinstance(val, complex) else val
    if normalized:
        # diagonal entries are <f, f>, real up to representation
        diag = [
            g[i][i].real if isinstance(g[i][i], complex) else g[i][i] for i in range(n)
        ]
        if any(d == 0 for d in diag):
            raise ValueError("cannot normalize a Gram matrix with a zero diagonal")
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i == j:
                    out[i][j] = diag[i] / diag[i]
                elif g[i][j] == 0:
                    out[i][j] = g[i][j]
                else:
                    out[i][j] = g[i][j] / sqrt(float(diag[i]) * float(diag[j]))
        g = out
    if all(
        isinstance(x, EXACT_TYPES) for row in g for x in row
    ):
        return np.array(g, dtype=object)
    return np.array(
        [[complex(x) for x in row] for row in g], dtype=complex
    )
