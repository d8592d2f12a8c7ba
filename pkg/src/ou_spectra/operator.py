"""The generator on polynomial spaces and its matrix representations.

The generator is L f = (1/2) tr(Q D^2 f) + <Bx, grad f>. Applied to
polynomials it never raises the degree: the drift part preserves homogeneous
degree and the diffusion part lowers it by exactly two, so every graded
monomial basis yields a block upper triangular matrix.

The rotation machinery (split of A = 2L into a Hermite-diagonal part plus a
skew rotation) uses the doubled operator A = 2L throughout, matching the
convention under which the tridiagonal rotation matrices below are stated;
reports carry that flag so the factor of two never leaks into the generator
itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import (
    BasisUnavailable,
    DimensionMismatch,
    NotNormalized,
    UnsupportedDimension,
)
from .exact import rational_sqrt
from .gaussian import MomentTable, inner_product
from .model import OUModel, covariance_at, matrix_exponential, solve_lyapunov
from .polynomials import (
    GradedBasis,
    SparsePolynomial,
    hermite_tensor,
    monomial_basis,
)

OPERATOR_TAGS = ("L", "A", "drift", "diffusion", "rotation-part", "nilpotent-part")

NORMALIZED_TOL = 1e-12


@dataclass(frozen=True)
class OperatorMatrix:
    """Matrix of an operator on a graded basis; column j holds the
    coordinates of the image of basis element j."""

    basis: GradedBasis
    basis_kind: str  # "monomial" | "hermite-normal-form"
    operator: str
    entries: object  # list-of-lists (exact) or ndarray (float)
    is_exact: bool

    def as_array(self) -> np.ndarray:
        if self.is_exact:
            return np.array([[float(x) for x in row] for row in self.entries])
        return np.asarray(self.entries)

    @property
    def size(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class RotationSplit:
    """Data of the split A = A_1 + rotation for a normalized model:
    D_lambda holds the stationary variances, C = 2B + D_lambda^(-1) is skew."""

    D_lambda: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class NormalCheck:
    normal: bool
    defect: float
    tol: float


# -- pointwise action ------------------------------------------------------


def _model_matrices(model: OUModel, p: SparsePolynomial):
    if model.is_exact and p.is_exact:
        return model.Q_exact, model.B_exact
    return model.Q, model.B


def apply_diffusion(model: OUModel, p: SparsePolynomial) -> SparsePolynomial:
    """Second-order part (1/2) sum_ij Q_ij d^2 p / dx_i dx_j; lowers degree by 2."""
    if p.dim != model.dim:
        raise DimensionMismatch(f"polynomial dim {p.dim} vs model dim {model.dim}")
    Q, _ = _model_matrices(model, p)
    half = Fraction(1, 2) if (model.is_exact and p.is_exact) else 0.5
    out: dict = {}
    for alpha, c in p.terms.items():
        for i in range(model.dim):
            if alpha[i] == 0:
                continue
            for j in range(model.dim):
                qij = Q[i][j] if isinstance(Q, list) else Q[i, j]
                if qij == 0:
                    continue
                factor = alpha[i] * (alpha[j] - (1 if i == j else 0))
                if factor == 0:
                    continue
                beta = list(alpha)
                beta[i] -= 1
                beta[j] -= 1
                key = tuple(beta)
                val = out.get(key, 0) + half * qij * factor * c
                if val == 0:
                    out.pop(key, None)
                else:
                    out[key] = val
    return SparsePolynomial(p.dim, out)


def apply_drift(model: OUModel, p: SparsePolynomial) -> SparsePolynomial:
    """First-order part <Bx, grad p>; preserves homogeneous degree."""
    if p.dim != model.dim:
        raise DimensionMismatch(f"polynomial dim {p.dim} vs model dim {model.dim}")
    _, B = _model_matrices(model, p)
    out: dict = {}
    for alpha, c in p.terms.items():
        for i in range(model.dim):
            if alpha[i] == 0:
                continue
            for j in range(model.dim):
                bij = B[i][j] if isinstance(B, list) else B[i, j]
                if bij == 0:
                    continue
                beta = list(alpha)
                beta[i] -= 1
                beta[j] += 1
                key = tuple(beta)
                val = out.get(key, 0) + bij * alpha[i] * c
                if val == 0:
                    out.pop(key, None)
                else:
                    out[key] = val
    return SparsePolynomial(p.dim, out)


def apply_L(model: OUModel, p: SparsePolynomial) -> SparsePolynomial:
    """Full generator; constants map to zero and degree never increases."""
    return apply_diffusion(model, p) + apply_drift(model, p)


def _apply_operator(model: OUModel, p: SparsePolynomial, operator: str) -> SparsePolynomial:
    if operator == "L":
        return apply_L(model, p)
    if operator == "A":
        return apply_L(model, p) * 2
    if operator == "drift":
        return apply_drift(model, p)
    if operator == "diffusion":
        return apply_diffusion(model, p)
    raise ValueError(f"unknown operator tag {operator!r}")


# -- coordinates -----------------------------------------------------------


def poly_coordinates(p: SparsePolynomial, basis: GradedBasis):
    """Coefficient vector of p in a monomial basis; rejects stray terms."""
    pos = {alpha: k for k, alpha in enumerate(basis.indices)}
    vec = [0] * len(basis)
    for alpha, c in p.terms.items():
        if alpha not in pos:
            raise BasisUnavailable(
                f"term {alpha} falls outside the basis (cap {basis.cap}, "
                f"homogeneous={basis.homogeneous})"
            )
        vec[pos[alpha]] = c
    return vec


def poly_from_coordinates(vec, basis: GradedBasis) -> SparsePolynomial:
    terms = {alpha: c for alpha, c in zip(basis.indices, vec)}
    return SparsePolynomial(basis.dim, terms)


def degree_block_slices(basis: GradedBasis) -> list[tuple[int, slice]]:
    """Contiguous index ranges of each total degree in a graded basis."""
    out = []
    degrees = basis.degrees()
    start = 0
    for k in range(1, len(degrees) + 1):
        if k == len(degrees) or degrees[k] != degrees[start]:
            out.append((degrees[start], slice(start, k)))
            start = k
    return out


# -- matrices --------------------------------------------------------------


def operator_matrix(
    model: OUModel,
    n: int,
    basis_kind: str = "monomial",
    operator: str = "L",
    homogeneous: bool = False,
    ordering: str | None = None,
) -> OperatorMatrix:
    """Assemble the operator's matrix on a degree-capped basis.

    Monomial bases keep exact entries for exact models. The Hermite route
    needs a normalized model (Q = I, stationary covariance diagonal) and
    returns coordinates with respect to the orthonormal dilated Hermite
    family; it is assembled by projecting images onto the basis, exactly
    whenever the dilations are rational.
    """
    if basis_kind == "monomial":
        return _monomial_matrix(model, n, operator, homogeneous, ordering or "graded-lex")
    if basis_kind == "hermite-normal-form":
        return _hermite_matrix(model, n, operator, homogeneous)
    raise ValueError(f"unknown basis kind {basis_kind!r}")


def _monomial_matrix(model, n, operator, homogeneous, ordering):
    basis = monomial_basis(model.dim, n, ordering, homogeneous)
    exact_entries = model.is_exact
    cols = []
    for alpha in basis.indices:
        one = Fraction(1) if exact_entries else 1.0
        image = _apply_operator(model, SparsePolynomial.monomial(model.dim, alpha, one), operator)
        try:
            cols.append(poly_coordinates(image, basis))
        except BasisUnavailable as e:
            raise BasisUnavailable(
                f"operator {operator!r} leaves the homogeneous degree-{n} space; "
                f"use the full basis ({e})"
            ) from e
    if exact_entries:
        entries = [[cols[j][i] for j in range(len(basis))] for i in range(len(basis))]
        return OperatorMatrix(basis, "monomial", operator, entries, True)
    arr = np.array(cols, dtype=float).T
    return OperatorMatrix(basis, "monomial", operator, arr, False)


def _check_normalized(model: OUModel, q_inf: CovarianceMatrix):
    if model.is_exact and q_inf.is_exact:
        qx = model.Q_exact
        ok_q = all(
            qx[i][j] == (1 if i == j else 0)
            for i in range(model.dim)
            for j in range(model.dim)
        )
        sx = q_inf.sigma_exact
        ok_diag = all(
            sx[i][j] == 0 for i in range(model.dim) for j in range(model.dim) if i != j
        )
        return ok_q and ok_diag
    q = model.Q
    s = q_inf.sigma
    ok_q = np.abs(q - np.eye(model.dim)).max() <= NORMALIZED_TOL
    off = s - np.diag(np.diag(s))
    ok_diag = np.abs(off).max() <= NORMALIZED_TOL * max(1.0, np.abs(np.diag(s)).max())
    return ok_q and ok_diag


def _hermite_matrix(model, n, operator, homogeneous):
    q_inf = solve_lyapunov(model)
    if not _check_normalized(model, q_inf):
        raise BasisUnavailable(
            "Hermite normal-form basis needs Q = I and a diagonal stationary covariance; "
            "run normalize_model first"
        )
    dim = model.dim
    if q_inf.is_exact:
        lam = [q_inf.sigma_exact[i][i] for i in range(dim)]
        dil = [rational_sqrt(1 / (2 * l)) for l in lam]
        exact_route = model.is_exact and all(d is not None for d in dil)
        dilations = (
            dil if exact_route else [1.0 / math.sqrt(2.0 * float(l)) for l in lam]
        )
        sigma = q_inf.sigma_exact if exact_route else q_inf.sigma
    else:
        lam = list(np.diag(q_inf.sigma))
        exact_route = False
        dilations = [1.0 / math.sqrt(2.0 * float(l)) for l in lam]
        sigma = q_inf.sigma

    basis = monomial_basis(dim, n, "graded-lex", homogeneous)
    polys = [hermite_tensor(k, dilations, normalized=False) for k in basis.indices]
    table = MomentTable(sigma)
    norms = [inner_product(h, h, sigma, table) for h in polys]
    size = len(basis)
    entries = np.zeros((size, size))
    images = [_apply_operator(model, h, operator) for h in polys]
    for j in range(size):
        img = images[j]
        if img.is_zero:
            continue
        for i in range(size):
            c = inner_product(img, polys[i], sigma, table)
            if c == 0:
                continue
            # coordinate in the orthonormal basis: (c / s_i) * sqrt(s_i / s_j)
            if exact_route:
                coord = c / norms[i]
                ratio = norms[i] / norms[j]
            else:
                coord = float(c) / float(norms[i])
                ratio = float(norms[i]) / float(norms[j])
            entries[i, j] = float(coord) * math.sqrt(float(ratio))
    return OperatorMatrix(basis, "hermite-normal-form", operator, entries, False)


def homogeneous_drift_matrix(
    model: OUModel, n: int, ordering: str | None = None
) -> OperatorMatrix:
    """Matrix of the drift part on homogeneous degree-n monomials.

    The default ordering sorts exponent vectors by the weighted sum
    sum_j j*alpha_j, oriented so a one-eigenvalue Jordan-type drift (the
    off-diagonal mass on one side of the diagonal) exposes its nilpotent part
    as a strictly upper triangular block.
    """
    if ordering is None:
        B = model.B
        above = np.abs(np.triu(B, 1)).sum()
        below = np.abs(np.tril(B, -1)).sum()
        ordering = "v-nonincreasing" if above > 0 and below == 0 else "v-nondecreasing"
    return _monomial_matrix(model, n, "drift", True, ordering)


def nilpotent_drift_part(model: OUModel, n: int, ordering: str | None = None) -> OperatorMatrix:
    """Drift matrix on homogeneous degree n minus lambda*n*I, for drifts with a
    constant diagonal (Jordan-type single-eigenvalue inputs)."""
    om = homogeneous_drift_matrix(model, n, ordering)
    if model.is_exact:
        diag = model.B_exact[0][0]
        if any(model.B_exact[i][i] != diag for i in range(model.dim)):
            raise ValueError("drift diagonal is not constant; no single-eigenvalue split")
        entries = [
            [om.entries[i][j] - (diag * n if i == j else 0) for j in range(om.size)]
            for i in range(om.size)
        ]
        return OperatorMatrix(om.basis, "monomial", "nilpotent-part", entries, True)
    diag = model.B[0, 0]
    if np.abs(np.diag(model.B) - diag).max() > 1e-12:
        raise ValueError("drift diagonal is not constant; no single-eigenvalue split")
    return OperatorMatrix(
        om.basis, "monomial", "nilpotent-part", om.as_array() - diag * n * np.eye(om.size), False
    )


# -- rotation machinery (doubled operator A = 2L) ---------------------------


def rotation_split(model: OUModel) -> RotationSplit:
    """Split data for A = 2L on a normalized model: D_lambda = diag of the
    stationary covariance, C = 2B + D_lambda^(-1).

    The Lyapunov equation forces C * D_lambda to be skew; C itself is skew
    exactly when the drift only mixes coordinates of equal stationary
    variance (as in the rotation example with D_lambda = I/2). Models outside
    that class are rejected because the split would not be a rotation.
    """
    q_inf = solve_lyapunov(model)
    if not _check_normalized(model, q_inf):
        raise NotNormalized(
            "rotation split needs Q = I and diagonal stationary covariance"
        )
    lam = np.diag(q_inf.sigma).copy()
    D = np.diag(lam)
    C = 2.0 * model.B + np.diag(1.0 / lam)
    skew_defect = np.abs(C + C.T).max()
    if skew_defect > 1e-12 * max(1.0, np.abs(C).max()):
        raise NotNormalized(
            f"C = 2B + D^-1 is not skew (defect {skew_defect:.2e}); the drift mixes "
            "coordinates with distinct stationary variances"
        )
    return RotationSplit(D_lambda=D, C=C)


def hermite_rotation_matrix(split: RotationSplit, n: int) -> OperatorMatrix:
    """Matrix of the rotation part on the degree-n Hermite space in two
    dimensions, basis ordered (n,0), (n-1,1), ..., (0,n).

    Nonzero entries sit on the two off-diagonals: with c the upper-right
    entry of C, entry (kappa+1, kappa) is c*sqrt((kappa+1)(n-kappa)) and the
    transpose entry is its negative, so the matrix is skew-symmetric.
    """
    if split.D_lambda.shape[0] != 2:
        raise UnsupportedDimension("the Hermite rotation matrix is a 2-D construction")
    if n < 0:
        raise ValueError("degree must be >= 0")
    c = float(split.C[0, 1])
    m = np.zeros((n + 1, n + 1))
    for kappa in range(n):
        v = c * math.sqrt((kappa + 1) * (n - kappa))
        m[kappa + 1, kappa] = v
        m[kappa, kappa + 1] = -v
    basis = monomial_basis(2, n, "graded-lex", homogeneous=True)
    return OperatorMatrix(basis, "hermite-normal-form", "rotation-part", m, False)


# -- exact semigroup action on polynomials ----------------------------------


def semigroup_apply(model: OUModel, t: float, p: SparsePolynomial) -> SparsePolynomial:
    """Closed-form action of the time-t semigroup on a polynomial.

    Substitutes e^(tB) x - y into p and integrates the y-monomials against
    the time-t Gaussian, so the only error is floating-point roundoff, not
    discretization. Degree never increases.
    """
    if p.dim != model.dim:
        raise DimensionMismatch(f"polynomial dim {p.dim} vs model dim {model.dim}")
    if not (t > 0):
        raise ValueError("t must be positive")
    if p.is_zero:
        return p
    E = matrix_exponential(model.B, t)
    table = MomentTable(covariance_at(model, t).sigma)
    dim = model.dim
    lin = [
        SparsePolynomial(
            dim, {tuple(int(j == k) for k in range(dim)): E[i, j] for j in range(dim) if E[i, j] != 0}
        )
        for i in range(dim)
    ]
    max_exp = [max((a[i] for a in p.terms), default=0) for i in range(dim)]
    powers = [[SparsePolynomial.constant(dim, 1.0)] for _ in range(dim)]
    for i in range(dim):
        for _ in range(max_exp[i]):
            powers[i].append(powers[i][-1] * lin[i])

    result = SparsePolynomial.zero(dim)
    for alpha, coeff in p.terms.items():
        coeff = complex(coeff) if isinstance(coeff, complex) else float(coeff)
        for beta in product(*(range(a + 1) for a in alpha)):
            if sum(beta) % 2 == 1:
                continue
            moment = table.moment(beta)
            if moment == 0:
                continue
            weight = coeff * float(moment)
            piece = SparsePolynomial.constant(dim, 1.0)
            for i in range(dim):
                weight *= math.comb(alpha[i], beta[i])
                if alpha[i] - beta[i] > 0:
                    piece = piece * powers[i][alpha[i] - beta[i]]
            result = result + piece * weight
    return result


def check_normal(M, tol: float = 1e-12) -> NormalCheck:
    """Normality defect max|M M* - M* M| and verdict against tol."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("check_normal needs a square matrix")
    D = A @ A.conj().T - A.conj().T @ A
    defect = float(np.abs(D).max())
    return NormalCheck(normal=defect <= tol, defect=defect, tol=tol)
