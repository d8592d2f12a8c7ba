"""Model definition and covariance machinery for the diffusion pair (Q, B).

A model is a symmetric positive-definite diffusion matrix Q together with a
Hurwitz drift matrix B (all eigenvalue real parts negative). The stationary
covariance solves the Lyapunov equation B*S + S*B^T + Q = 0; we solve the
vectorized N^2 x N^2 linear system rather than integrating, which is exact in
the rational backend. Quadrature of the defining integral survives only as a
test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import exact
from .errors import (
    NotHurwitz,
    NotPositiveDefinite,
    NotSymmetric,
    SingularSystem,
    ValidationError,
)

HURWITZ_TOL = 1e-10
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class OUModel:
    """Validated diffusion/drift pair.

    ``Q``/``B`` are float arrays; when every input entry was rational the
    exact copies are kept alongside and ``backend`` is "exact". Instances are
    immutable and safe to share.
    """

    dim: int
    Q: np.ndarray
    B: np.ndarray
    backend: str  # "exact" | "float"
    Q_exact: exact.Matrix | None = None
    B_exact: exact.Matrix | None = None

    @property
    def is_exact(self) -> bool:
        return self.backend == "exact"


@dataclass(frozen=True)
class CovarianceMatrix:
    """Covariance at time t, with t = inf meaning the stationary one."""

    t: float
    sigma: np.ndarray
    sigma_exact: exact.Matrix | None = None

    @property
    def is_exact(self) -> bool:
        return self.sigma_exact is not None


@dataclass(frozen=True)
class CoordinateChange:
    """Invertible change of coordinates x -> H x."""

    H: np.ndarray
    H_inv: np.ndarray
    kind: str  # "orthogonal" | "general-linear"


@dataclass(frozen=True)
class SchurResult:
    change: CoordinateChange
    lower: np.ndarray
    complex_spectrum: bool  # True: 2x2 blocks present, triangular reduction over R unavailable


def _entries_exact(rows) -> bool:
    return all(exact.is_exact_scalar(x) for row in rows for x in row)


def _coerce_matrix(m, name: str):
    """Accept nested sequences / ndarray; return (float array, exact rows or None)."""
    if isinstance(m, np.ndarray):
        if m.dtype == object:
            rows = [list(r) for r in m]
        else:
            arr = np.array(m, dtype=float)
            if arr.ndim != 2:
                raise ValidationError(f"{name} must be a 2-D matrix")
            return arr, None
    else:
        rows = [list(r) for r in m]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValidationError(f"{name} must be rectangular and nonempty")
    if _entries_exact(rows):
        ex = exact.matrix(rows)
        return exact.to_float(ex), ex
    try:
        arr = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} has a non-numeric entry: {e}") from e
    return arr, None


def validate_model(Q, B, backend: str = "auto", tol_hurwitz: float = HURWITZ_TOL) -> OUModel:
    """Validate (Q, B) and fix the scalar backend.

    Checks, in order: shapes, symmetry of Q, positive definiteness of Q via
    leading principal minors, and the Hurwitz property of B. Error messages
    name the offending minor or eigenvalue.
    """
    Qf, Qx = _coerce_matrix(Q, "Q")
    Bf, Bx = _coerce_matrix(B, "B")
    if Qf.shape[0] != Qf.shape[1] or Bf.shape != Qf.shape:
        raise ValidationError(
            f"Q and B must be square and equally sized, got {Qf.shape} and {Bf.shape}"
        )
    n = Qf.shape[0]

    exact_available = Qx is not None and Bx is not None
    if backend == "exact" and not exact_available:
        raise ValidationError(
            "exact backend requested but some entries are not rational"
        )
    use_exact = exact_available if backend == "auto" else backend == "exact"
    if backend not in ("auto", "exact", "float"):
        raise ValidationError(f"unknown backend {backend!r}")

    # symmetry
    if use_exact:
        if not exact.is_symmetric(Qx):
            i, j = next(
                (i, j)
                for i in range(n)
                for j in range(n)
                if Qx[i][j] != Qx[j][i]
            )
            raise NotSymmetric(f"Q[{i}][{j}] = {Qx[i][j]} != Q[{j}][{i}] = {Qx[j][i]}")
    else:
        scale = max(np.abs(Qf).max(), 1.0)
        asym = np.abs(Qf - Qf.T)
        if asym.max() > SYMMETRY_RTOL * scale:
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise NotSymmetric(
                f"Q[{i}][{j}] = {Qf[i, j]!r} vs Q[{j}][{i}] = {Qf[j, i]!r}"
            )

    # positive definiteness via leading principal minors
    if use_exact:
        for k, minor in enumerate(exact.leading_minors(Qx)):
            if minor <= 0:
                raise NotPositiveDefinite(
                    f"leading {k + 1}x{k + 1} minor of Q is {minor} <= 0"
                )
    else:
        for k in range(n):
            minor = np.linalg.det(Qf[: k + 1, : k + 1])
            if minor <= 0:
                raise NotPositiveDefinite(
                    f"leading {k + 1}x{k + 1} minor of Q is {minor} <= 0"
                )

    # Hurwitz drift
    eigs = drift_eigenvalues_raw(Bf)
    worst = max(eigs, key=lambda z: z.real)
    if worst.real >= -tol_hurwitz:
        raise NotHurwitz(
            f"drift eigenvalue {worst} has real part >= -{tol_hurwitz}"
        )

    return OUModel(
        dim=n,
        Q=Qf,
        B=Bf,
        backend="exact" if use_exact else "float",
        Q_exact=Qx if use_exact else None,
        B_exact=Bx if use_exact else None,
    )


def _is_triangular(a: np.ndarray, lower: bool) -> bool:
    n = a.shape[0]
    idx = np.triu_indices(n, 1) if lower else np.tril_indices(n, -1)
    return not np.any(a[idx])


def drift_eigenvalues_raw(B: np.ndarray) -> list[complex]:
    """Eigenvalues of the drift, reading the diagonal when B is exactly
    triangular (defective triangular inputs would otherwise scatter by
    ~eps^(1/k) under a dense eigen-solver)."""
    B = np.asarray(B, dtype=float)
    if _is_triangular(B, lower=True) or _is_triangular(B, lower=False):
        return [complex(x) for x in np.diag(B)]
    return [complex(z) for z in np.linalg.eigvals(B)]


# -- matrix exponential -------------------------------------------------

_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def matrix_exponential(M, s: float = 1.0) -> np.ndarray:
    """e^(s*M) by scaling-and-squaring with the order-13 Pade approximant.

    The order is fixed (no degree selection): at the matrix sizes this tool
    supports, the extra multiplications are irrelevant and a single code path
    is easier to trust. s = 0 returns the identity exactly.
    """
    A = np.array(M, dtype=float) * float(s)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix_exponential needs a square matrix")
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    if norm == 0.0:
        return np.eye(n)
    squarings = max(0, int(math.ceil(math.log2(norm / _THETA13))) if norm > _THETA13 else 0)
    A = A / (2.0**squarings)

    b = _PADE13
    I = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6
        + b[5] * A4
        + b[3] * A2
        + b[1] * I
    )
    V = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6
        + b[4] * A4
        + b[2] * A2
        + b[0] * I
    )
    R = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        R = R @ R
    return R


# -- covariances ---------------------------------------------------------


def solve_lyapunov(model: OUModel) -> CovarianceMatrix:
    """Stationary covariance: the unique S with B*S + S*B^T + Q = 0.

    Solved as a vectorized linear system; with the exact backend the residual
    is identically zero.
    """
    n = model.dim
    if model.is_exact:
        A = exact.zeros(n * n, n * n)
        rhs = []
        Bx = model.B_exact
        for i in range(n):
            for j in range(n):
                row = i * n + j
                for k in range(n):
                    A[row][k * n + j] += Bx[i][k]
                    A[row][i * n + k] += Bx[j][k]
                rhs.append(-model.Q_exact[i][j])
        try:
            vec = exact.solve(A, rhs)
        except SingularSystem as e:
            raise SingularSystem(
                "Lyapunov system singular; drift validation should have caught this"
            ) from e
        rows = [[vec[i * n + j] for j in range(n)] for i in range(n)]
        return CovarianceMatrix(t=math.inf, sigma=exact.to_float(rows), sigma_exact=rows)

    B = model.B
    A = np.kron(B, np.eye(n)) + np.kron(np.eye(n), B)
    try:
        vec = np.linalg.solve(A, -model.Q.reshape(-1))
    except np.linalg.LinAlgError as e:
        raise SingularSystem(str(e)) from e
    sigma = vec.reshape(n, n)
    sigma = (sigma + sigma.T) / 2.0
    return CovarianceMatrix(t=math.inf, sigma=sigma)


def covariance_at(model: OUModel, t: float) -> CovarianceMatrix:
    """Covariance accumulated up to finite time t > 0:
    S_t = S_inf - e^(tB) S_inf e^(tB^T)."""
    if not (t > 0) or math.isinf(t):
        raise ValueError("t must be a positive finite number")
    q_inf = solve_lyapunov(model).sigma
    E = matrix_exponential(model.B, t)
    sigma = q_inf - E @ q_inf @ E.T
    return CovarianceMatrix(t=float(t), sigma=(sigma + sigma.T) / 2.0)


# -- coordinate changes ---------------------------------------------------


def normalize_model(model: OUModel) -> tuple[CoordinateChange, OUModel]:
    """Find H with H Q H^T = I and the transformed stationary covariance
    diagonal; return the change and the transformed model.

    Pipeline: whiten with Q^(-1/2) (symmetric PSD root), then rotate with the
    orthogonal eigenbasis of the whitened stationary covariance. The drift
    spectrum is untouched: B maps to H B H^(-1).
    """
    w, V = np.linalg.eigh(model.Q)
    if np.any(w <= 0):
        raise NotPositiveDefinite("Q has a non-positive eigenvalue")
    h1 = V @ np.diag(w**-0.5) @ V.T

    q_inf = solve_lyapunov(model).sigma
    mid = h1 @ q_inf @ h1.T
    mid = (mid + mid.T) / 2.0
    _, U = np.linalg.eigh(mid)
    h2 = U.T

    H = h2 @ h1
    H_inv = np.linalg.inv(H)
    change = CoordinateChange(H=H, H_inv=H_inv, kind="general-linear")
    new_Q = H @ model.Q @ H.T
    new_B = H @ model.B @ H_inv
    normalized = validate_model(new_Q, new_B, backend="float")
    return change, normalized


def schur_triangularize(B) -> SchurResult:
    """Orthogonal H with H B H^T lower triangular, eigenvalues on the diagonal.

    Inputs that are already lower triangular pass through with H = I. Drifts
    with complex spectrum only admit the real Schur form with 2x2 blocks; the
    result is returned with ``complex_spectrum`` set so callers know the
    triangular reduction over the reals does not apply.
    """
    B = np.array(B, dtype=float)
    n = B.shape[0]
    if _is_triangular(B, lower=True):
        I = np.eye(n)
        return SchurResult(CoordinateChange(I, I, "orthogonal"), B.copy(), False)

    T, Z = scipy.linalg.schur(B, output="real")
    # upper (quasi-)triangular T = Z^T B Z; reverse the basis to get lower form
    J = np.eye(n)[::-1]
    H = J @ Z.T
    lower = H @ B @ H.T
    has_blocks = bool(np.any(np.abs(np.diag(lower, 1)) > 1e-12 * max(1.0, np.abs(lower).max())))
    lower_clean = np.where(np.abs(lower) < 1e-14 * max(1.0, np.abs(lower).max()), 0.0, lower)
    return SchurResult(
        CoordinateChange(H=H, H_inv=H.T, kind="orthogonal"),
        lower_clean,
        has_blocks,
    )
