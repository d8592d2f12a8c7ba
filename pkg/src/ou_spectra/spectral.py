"""Drift spectra, generalized eigenspaces, and orthogonality reports.

The generator's spectrum on polynomials of degree <= n is the set of sums
sum_j n_j * lambda_j over the distinct drift eigenvalues lambda_j with
sum n_j <= n. The assembled operator matrix is block upper triangular in any
graded monomial ordering, so its eigenvalues are collected degree block by
degree block; blocks that are exactly triangular (Jordan-type drifts supplied
in triangular form) have their eigenvalues read off the diagonal, which keeps
defective cases accurate where a dense eigen-solver would scatter them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iter_product
from math import acos, comb

import numpy as np

from . import exact
from .errors import (
    ComplexSpectrum,
    ConvergenceFailure,
    RankDecisionAmbiguous,
    RepeatedEigenvalue,
    UnsupportedDimension,
)
from .gaussian import MomentTable
from .model import OUModel, drift_eigenvalues_raw, solve_lyapunov
from .operator import (
    OperatorMatrix,
    degree_block_slices,
    operator_matrix,
    poly_from_coordinates,
)
from .polynomials import GradedBasis, SparsePolynomial

TOL_EIG = 1e-8
TOL_ORTH = 1e-9
TOL_NILP = 1e-9
RANK_RTOL = 1e-10
RANK_MIN_GAP = 1e4  # smallest singular-value ratio accepted as a rank gap


@dataclass(frozen=True)
class SpectrumPoint:
    value: complex
    witnesses: tuple[tuple[int, ...], ...]  # exponents against the distinct drift eigenvalues
    degrees: tuple[int, ...]


@dataclass(frozen=True)
class SpectrumSet:
    drift_eigenvalues: tuple[complex, ...]  # with multiplicity
    distinct: tuple[complex, ...]
    degree_cap: int
    points: tuple[SpectrumPoint, ...]
    tol: float = TOL_EIG

    def values(self) -> list[complex]:
        return [p.value for p in self.points]

    def multiset(self) -> list[complex]:
        """Eigenvalues with algebraic multiplicity: sums over the drift
        eigenvalues counted with multiplicity, one per exponent pattern.
        Matches the eigenvalue multiset of the degree-capped operator matrix.
        """
        from itertools import combinations_with_replacement

        out = []
        for n in range(self.degree_cap + 1):
            for combo in combinations_with_replacement(self.drift_eigenvalues, n):
                out.append(sum(combo, 0j))
        return out


@dataclass(frozen=True)
class EigenGroup:
    eigenvalue: complex
    multiplicity: int  # dimension of the generalized eigenspace at the cap
    nilpotency_index: int
    vectors: np.ndarray  # (basis size, multiplicity), coordinate columns
    polynomials: tuple[SparsePolynomial, ...]
    max_power_residual: float  # ||(M - mu I)^k u|| / ||u||, worst basis column


@dataclass(frozen=True)
class SpectralDecomposition:
    model: OUModel
    degree_cap: int
    basis: GradedBasis
    matrix: OperatorMatrix
    groups: tuple[EigenGroup, ...]
    tol_eig: float = TOL_EIG

    def group_at(self, value: complex, tol: float | None = None) -> EigenGroup:
        tol = self.tol_eig if tol is None else tol
        for g in self.groups:
            if abs(g.eigenvalue - value) <= tol:
                return g
        raise KeyError(f"no eigenvalue group within {tol} of {value}")


@dataclass(frozen=True)
class PairVerdict:
    i: int
    j: int
    max_normalized: float
    orthogonal: bool
    block: np.ndarray


@dataclass(frozen=True)
class OrthogonalityReport:
    pairs: tuple[PairVerdict, ...]
    tol_orth: float
    all_orthogonal: bool
    eigenvalues: tuple[complex, ...] = field(default=())


# -- drift spectrum ----------------------------------------------------------


def drift_eigenvalues(B) -> list[complex]:
    """Drift eigenvalues with algebraic multiplicity, conjugate-paired for
    real input."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("drift must be square")
    if B.shape[0] > 12:
        raise ValueError("drift eigenvalues supported for N <= 12")
    try:
        vals = drift_eigenvalues_raw(B)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigen-solver failed on {B!r}") from e
    return sorted(vals, key=lambda z: (z.real, z.imag))


def _cluster(values, tol: float):
    """Group complex values whose chain-distance is below tol; returns a list
    of (representative, members)."""
    ordered = sorted(values, key=lambda z: (z.real, z.imag))
    clusters: list[list[complex]] = []
    for v in ordered:
        if clusters and abs(v - clusters[-1][-1]) <= tol:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [(sum(c) / len(c), c) for c in clusters]


def spectrum(model: OUModel, degree_cap: int, tol_eig: float = TOL_EIG) -> SpectrumSet:
    """Enumerate sum_j n_j lambda_j over distinct drift eigenvalues,
    sum n_j <= cap, deduplicated within tol; witnesses are kept per value."""
    if degree_cap < 0:
        raise ValueError("degree cap must be >= 0")
    eigs = drift_eigenvalues(model.B)
    # distinct eigenvalues ordered with the slowest decay first, so witness
    # exponent vectors read off against (-a+d, -a-d)-style orderings
    distinct = sorted(
        (rep for rep, _ in _cluster(eigs, tol_eig)),
        key=lambda z: (-z.real, z.imag),
    )
    r = len(distinct)
    raw: list[tuple[complex, tuple[int, ...]]] = []
    for n in iter_product(*(range(degree_cap + 1) for _ in range(r))):
        if sum(n) > degree_cap:
            continue
        raw.append((sum(nj * lj for nj, lj in zip(n, distinct)), tuple(n)))
    ordered = sorted(raw, key=lambda vw: (vw[0].real, vw[0].imag))
    clusters: list[list[tuple[complex, tuple[int, ...]]]] = []
    for v, n in ordered:
        if clusters and abs(v - clusters[-1][-1][0]) <= tol_eig:
            clusters[-1].append((v, n))
        else:
            clusters.append([(v, n)])
    points = []
    for members in clusters:
        rep = sum(v for v, _ in members) / len(members)
        witnesses = tuple(sorted(n for _, n in members))
        degrees = tuple(sum(n) for n in witnesses)
        points.append(SpectrumPoint(value=rep, witnesses=witnesses, degrees=degrees))
    points.sort(key=lambda p: (-p.value.real, p.value.imag))
    return SpectrumSet(
        drift_eigenvalues=tuple(eigs),
        distinct=tuple(distinct),
        degree_cap=degree_cap,
        points=tuple(points),
        tol=tol_eig,
    )


# -- operator eigenvalues and kernels ----------------------------------------


def _is_float_triangular(a: np.ndarray, lower: bool) -> bool:
    n = a.shape[0]
    idx = np.triu_indices(n, 1) if lower else np.tril_indices(n, -1)
    return not np.any(a[idx])


def operator_eigenvalues(om: OperatorMatrix) -> list[complex]:
    """Eigenvalues of a degree-graded operator matrix, block by block."""
    arr = om.as_array()
    vals: list[complex] = []
    for _, sl in degree_block_slices(om.basis):
        block = arr[sl, sl]
        if _is_float_triangular(block, lower=True) or _is_float_triangular(block, lower=False):
            vals.extend(complex(x) for x in np.diag(block))
        else:
            vals.extend(complex(z) for z in np.linalg.eigvals(block))
    return vals


def _nullspace_bounded(mat: np.ndarray, lo_nullity: int, hi_nullity: int, rank_rtol: float):
    """Nullity and an orthonormal kernel basis, with the nullity known a
    priori to lie in [lo_nullity, hi_nullity].

    The cut is placed at the largest relative gap in the ascending singular
    values inside that window (powers of non-normal matrices spread their
    genuine singular values too widely for a fixed threshold). A decision is
    only accepted when the winning gap is decisive; otherwise the rank call
    is reported as ambiguous rather than guessed.
    """
    n = mat.shape[1]
    u, s, vh = np.linalg.svd(mat)
    asc = s[::-1]  # ascending
    if asc.size == 0 or asc[-1] == 0.0:
        return n, np.eye(n, dtype=complex)
    hi_nullity = min(hi_nullity, n)
    lo_nullity = max(lo_nullity, 0)
    floor = asc[-1] * max(rank_rtol * 1e-3, 1e-300)
    best_nullity, best_gap = None, 0.0
    for nu in range(lo_nullity, hi_nullity + 1):
        low = asc[nu - 1] if nu >= 1 else None  # largest singular value called zero
        high = asc[nu] if nu < asc.size else None  # smallest called nonzero
        if high is None:
            gap = math.inf if (low is None or low <= floor) else asc[-1] / low
        elif low is None or low == 0.0:
            gap = high / floor
        else:
            gap = high / low
        if gap > best_gap:
            best_gap, best_nullity = gap, nu
    if best_nullity is None or best_gap < RANK_MIN_GAP:
        window = asc[max(lo_nullity - 1, 0) : hi_nullity + 1]
        raise RankDecisionAmbiguous(
            f"singular values {window.tolist()} admit no decisive rank gap in "
            f"nullity window [{lo_nullity}, {hi_nullity}] (best gap {best_gap:.2e})"
        )
    if best_nullity == 0:
        return 0, np.zeros((n, 0), dtype=complex)
    return best_nullity, vh[-best_nullity:].conj().T


def _exact_clusters(om: OperatorMatrix):
    """Exact eigenvalue groups (Fraction value, multiplicity) when every
    degree block of the exact operator matrix is triangular; None otherwise."""
    if not om.is_exact:
        return None
    entries = om.entries
    values: list = []
    for _, sl in degree_block_slices(om.basis):
        idx = range(sl.start, sl.stop)
        lower_ok = all(entries[i][j] == 0 for i in idx for j in idx if j > i)
        upper_ok = all(entries[i][j] == 0 for i in idx for j in idx if j < i)
        if not (lower_ok or upper_ok):
            return None
        values.extend(entries[i][i] for i in idx)
    out: dict = {}
    for v in values:
        out[v] = out.get(v, 0) + 1
    return sorted(out.items(), key=lambda kv: (-kv[0], 0))


def _exact_group(om: OperatorMatrix, mu, mult: int) -> EigenGroup:
    """Exact generalized eigenspace: binary-search the nilpotency index on
    exact ranks, then read the kernel basis off an exact RREF."""
    size = len(om.basis)
    P = [
        [om.entries[i][j] - (mu if i == j else 0) for j in range(size)]
        for i in range(size)
    ]
    P_int, _ = exact.common_denominator_scale(P)
    cache: dict[int, list] = {}

    def kernel(k: int):
        if k not in cache:
            cache[k] = exact.nullspace(exact.int_matrix_power(P_int, k))
        return cache[k]

    lo, hi = 1, mult
    while lo < hi:
        mid = (lo + hi) // 2
        if len(kernel(mid)) >= mult:
            hi = mid
        else:
            lo = mid + 1
    index = lo
    basis_exact = kernel(index)
    vectors = np.array([[float(x) for x in v] for v in basis_exact], dtype=float).T
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    polys = tuple(poly_from_coordinates(v, om.basis) for v in basis_exact)
    return EigenGroup(
        eigenvalue=complex(float(mu)),
        multiplicity=len(basis_exact),
        nilpotency_index=index,
        vectors=vectors.astype(complex),
        polynomials=polys,
        max_power_residual=0.0,
    )


def generalized_eigenspaces(
    model: OUModel,
    degree_cap: int,
    tol_eig: float = TOL_EIG,
    rank_rtol: float = RANK_RTOL,
) -> SpectralDecomposition:
    """Group the operator matrix's eigenvalues and extract each generalized
    eigenspace by iterating kernels of (M - mu I)^k until the dimension
    stabilizes; k is capped by the group's algebraic multiplicity.

    Exact models whose operator matrix is triangular degree block by degree
    block (drifts supplied in triangular or Jordan-type form) take a fully
    exact route: rational eigenvalues, exact ranks, and exact kernel bases
    with zero residual.
    """
    om = operator_matrix(model, degree_cap, "monomial", "L")
    exact_clusters = _exact_clusters(om)
    if exact_clusters is not None:
        groups = [_exact_group(om, mu, mult) for mu, mult in exact_clusters]
        groups.sort(key=lambda g: (-g.eigenvalue.real, g.eigenvalue.imag))
        return SpectralDecomposition(
            model=model,
            degree_cap=degree_cap,
            basis=om.basis,
            matrix=om,
            groups=tuple(groups),
            tol_eig=tol_eig,
        )

    M = om.as_array().astype(complex)
    size = M.shape[0]
    clusters = _cluster(operator_eigenvalues(om), tol_eig)

    groups = []
    for mu, members in clusters:
        mult = len(members)
        P = M - mu * np.eye(size)
        prev_nullity = 0
        basis_vecs = None
        index = mult
        # staircase: ker(P^(k+1)) = {v : P v in ker(P^k)} = ker((I - V V*) P),
        # which keeps every rank decision at the conditioning of P itself.
        # dim ker(P^k) grows strictly with k until it hits the algebraic
        # multiplicity, so the nullity window at step k is [prev+1, mult].
        for k in range(1, mult + 1):
            if basis_vecs is None:
                W = P
            else:
                W = P - basis_vecs @ (basis_vecs.conj().T @ P)
            nullity, vecs = _nullspace_bounded(W, prev_nullity + 1, mult, rank_rtol)
            prev_nullity, basis_vecs = nullity, vecs
            index = k
            if nullity >= mult:
                break
        if basis_vecs is None or prev_nullity == 0:
            raise RankDecisionAmbiguous(
                f"clustered eigenvalue {mu} shows an empty kernel; clustering "
                f"tolerance {tol_eig} does not match the matrix"
            )
        Pk = np.linalg.matrix_power(P, index)
        residual = float(
            max(np.linalg.norm(Pk @ basis_vecs[:, c]) for c in range(basis_vecs.shape[1]))
        )
        polys = tuple(
            _tidy_poly(poly_from_coordinates(basis_vecs[:, c], om.basis))
            for c in range(basis_vecs.shape[1])
        )
        groups.append(
            EigenGroup(
                eigenvalue=mu,
                multiplicity=prev_nullity,
                nilpotency_index=index,
                vectors=basis_vecs,
                polynomials=polys,
                max_power_residual=residual,
            )
        )
    groups.sort(key=lambda g: (-g.eigenvalue.real, g.eigenvalue.imag))
    return SpectralDecomposition(
        model=model,
        degree_cap=degree_cap,
        basis=om.basis,
        matrix=om,
        groups=tuple(groups),
        tol_eig=tol_eig,
    )


def _tidy_poly(p: SparsePolynomial) -> SparsePolynomial:
    """Drop coefficients at roundoff level and the imaginary parts of a
    polynomial that is real to machine precision."""
    scale = max((abs(complex(c)) for c in p.terms.values()), default=0.0)
    if scale == 0.0:
        return p
    cut = 1e-13 * scale
    out = {}
    for a, c in p.terms.items():
        c = complex(c)
        if abs(c) <= cut:
            continue
        out[a] = c.real if abs(c.imag) <= cut else c
    return SparsePolynomial(p.dim, out)


# -- orthogonality -----------------------------------------------------------


def basis_moment_gram(basis: GradedBasis, sigma) -> np.ndarray:
    """Moment matrix E[x^(alpha_i + alpha_j)] over a monomial basis."""
    table = MomentTable(np.asarray(sigma, dtype=float) if not isinstance(sigma, np.ndarray) else sigma)
    size = len(basis)
    g = np.zeros((size, size))
    for i, a in enumerate(basis.indices):
        for j in range(i, size):
            b = basis.indices[j]
            g[i, j] = g[j, i] = float(table.moment(tuple(x + y for x, y in zip(a, b))))
    return g


def orthogonality_report(
    dec: SpectralDecomposition,
    sigma=None,
    tol_orth: float = TOL_ORTH,
) -> OrthogonalityReport:
    """Pairwise cross-Gram data between distinct-eigenvalue groups under the
    stationary measure; a pair is orthogonal when every normalized inner
    product stays below tol.

    Works in basis coordinates: with G the moment matrix of the monomial
    basis, <u, v> = u^T G conj(v) for coordinate vectors u, v.
    """
    if sigma is None:
        sigma = solve_lyapunov(dec.model).sigma
    else:
        sigma = np.array(
            [[float(x) for x in row] for row in sigma], dtype=float
        )
    G = basis_moment_gram(dec.basis, sigma)
    groups = dec.groups
    mats = [np.asarray(g.vectors, dtype=complex) for g in groups]
    norms = []
    for V in mats:
        gram = V.T @ G @ V.conj()
        norms.append(np.sqrt(np.abs(np.diag(gram).real)))
    pairs = []
    all_ok = True
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            block = mats[i].T @ G @ mats[j].conj()
            denom = np.outer(norms[i], norms[j])
            with np.errstate(invalid="ignore", divide="ignore"):
                normalized = np.where(denom > 0, np.abs(block) / denom, 0.0)
            worst = float(normalized.max()) if normalized.size else 0.0
            ok = worst < tol_orth
            all_ok = all_ok and ok
            pairs.append(PairVerdict(i=i, j=j, max_normalized=worst, orthogonal=ok, block=block))
    return OrthogonalityReport(
        pairs=tuple(pairs),
        tol_orth=tol_orth,
        all_orthogonal=all_ok,
        eigenvalues=tuple(g.eigenvalue for g in groups),
    )


# -- drift eigenvector geometry (N = 2) ---------------------------------------


def b_eigenvector_angle(B, tol: float = 1e-10) -> float:
    """Angle in [0, pi/2] between the two real eigenvector lines of a 2x2
    drift with distinct real eigenvalues."""
    B = np.asarray(B, dtype=float)
    if B.shape != (2, 2):
        raise UnsupportedDimension("eigenvector angle is a 2x2 construction")
    vals, vecs = np.linalg.eig(B)
    if np.abs(vals.imag).max() > tol:
        raise ComplexSpectrum(f"drift eigenvalues {vals} are not real")
    vals = vals.real
    if abs(vals[0] - vals[1]) <= tol * max(1.0, np.abs(vals).max()):
        raise RepeatedEigenvalue(f"drift eigenvalues {vals} coincide")
    v1, v2 = vecs[:, 0].real, vecs[:, 1].real
    cosang = abs(float(v1 @ v2)) / (np.linalg.norm(v1) * np.linalg.norm(v2))
    return acos(min(1.0, max(0.0, cosang)))


def polynomial_space_dimension(dim: int, cap: int) -> int:
    return comb(dim + cap, dim)
